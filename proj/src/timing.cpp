#include "ada/timing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>

namespace ada::timing {

namespace {

constexpr double kSpeedTol = 1e-6;
constexpr Time kNoBound = std::numeric_limits<Time>::min() / 4;

bool same_speed(double a, double b) { return std::abs(a - b) <= kSpeedTol; }

double snap(double speed, const SpeedLevelSet& levels) {
    double best = levels.levels.front();
    for (double v : levels.levels) {
        if (std::abs(v - speed) < std::abs(best - speed)) best = v;
    }
    return best;
}

std::vector<double> common_levels(const SpeedLevelSet& a, const SpeedLevelSet& b) {
    std::vector<double> out;
    for (double v : a.levels) {
        for (double w : b.levels) {
            if (same_speed(v, w)) {
                out.push_back(v);
                break;
            }
        }
    }
    return out;
}

struct ChainChoice {
    bool ok = false;
    double peak = 0.0;
    Time time = 0;
};

ChainChoice best_peak(const ChainSpec& c, const Train& train, double entry, double exit, bool reduced) {
    const auto& levels = c.levels.levels;
    double limit = std::numeric_limits<double>::infinity();
    if (reduced) {
        if (levels.size() < 3) return {};
        limit = levels[levels.size() - 2];
    }
    for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
        const double peak = *it;
        if (peak > limit + kSpeedTol || peak + kSpeedTol < std::max(entry, exit) || !(peak > 0.0)) continue;
        if (profile_fits(c.chain.length, entry, peak, exit, train)) {
            return {true, peak, make_vprofile(c.chain, train, entry, peak, exit).running_time};
        }
    }
    return {};
}

// Minimum-time boundary speeds subject to the candidate sets; nullopt when none fit.
std::optional<std::vector<double>> fastest_speeds(const std::vector<ChainSpec>& chains, const Train& train,
                                                  const std::vector<std::vector<double>>& candidates, bool reduced) {
    const std::size_t nb = candidates.size();
    constexpr Time kInf = std::numeric_limits<Time>::max() / 4;
    std::vector<std::vector<Time>> cost(nb);
    std::vector<std::vector<int>> from(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        cost[b].assign(candidates[b].size(), kInf);
        from[b].assign(candidates[b].size(), -1);
    }
    for (std::size_t i = 0; i < candidates[0].size(); ++i) cost[0][i] = 0;
    for (std::size_t b = 0; b + 1 < nb; ++b) {
        for (std::size_t i = 0; i < candidates[b].size(); ++i) {
            if (cost[b][i] >= kInf) continue;
            for (std::size_t j = 0; j < candidates[b + 1].size(); ++j) {
                auto choice = best_peak(chains[b], train, candidates[b][i], candidates[b + 1][j], reduced);
                if (!choice.ok) continue;
                const Time c = cost[b][i] + choice.time;
                if (c < cost[b + 1][j]) {
                    cost[b + 1][j] = c;
                    from[b + 1][j] = static_cast<int>(i);
                }
            }
        }
    }
    int best = -1;
    for (std::size_t j = 0; j < candidates[nb - 1].size(); ++j) {
        if (cost[nb - 1][j] < kInf && (best < 0 || cost[nb - 1][j] < cost[nb - 1][best])) best = static_cast<int>(j);
    }
    if (best < 0) return std::nullopt;
    std::vector<double> speeds(nb);
    for (std::size_t b = nb; b-- > 0;) {
        speeds[b] = candidates[b][best];
        best = from[b][best];
    }
    return speeds;
}

Time floor_time(double t) { return static_cast<Time>(std::floor(t + 1e-7)); }
Time ceil_time(double t) { return static_cast<Time>(std::ceil(t - 1e-7)); }

}  // namespace

double Plan::boundary_speed(std::size_t b) const {
    if (b < profiles.size()) return profiles[b].entry_speed;
    return profiles.back().exit_speed;
}

std::optional<std::size_t> PathTiming::boundary_at(std::size_t node_index) const {
    for (std::size_t b = 0; b < boundaries.size(); ++b) {
        if (boundaries[b].node_index == node_index) return b;
    }
    return std::nullopt;
}

bool PathTiming::last_in_chain(std::size_t section) const { return chains[section_chain[section]].last_section == section; }

PathTiming build_path_timing(const Network& network, const TrainPathInput& input, const TimingConfig& config) {
    const Train& train = *input.train;
    const Path& path = input.path;
    if (path.sections.empty()) throw Error(ErrorCode::InfeasibleInput, "empty path for " + train.id);
    PathTiming pt;
    pt.path = path;
    pt.route_id = synthesized_route_id(path.sections);

    // Stops -> node indices.
    struct MappedStop {
        std::size_t stop_index;
        std::size_t node_index;
    };
    std::vector<MappedStop> mapped;
    std::size_t search_from = 0;
    for (std::size_t s = 0; s < input.stops.size(); ++s) {
        const auto& stop = input.stops[s];
        if (mapped.empty() && input.start.kind == StartCondition::Kind::Standing && input.current_section) {
            const Station* st = network.station_of_section(*input.current_section);
            if (st != nullptr && st->id == stop.station_id) {
                mapped.push_back({s, 0});
                continue;
            }
        }
        for (std::size_t i = search_from; i < path.sections.size(); ++i) {
            const Station* st = network.station_of_section(path.sections[i]);
            if (st != nullptr && st->id == stop.station_id) {
                mapped.push_back({s, i + 1});
                search_from = i + 1;
                break;
            }
        }
    }

    const std::size_t last_node = path.nodes.size() - 1;
    std::set<std::size_t> boundary_nodes{0, last_node};
    for (std::size_t i = 1; i < last_node; ++i) {
        if (network.node(path.nodes[i]).kind == NodeKind::MainSignal) boundary_nodes.insert(i);
        auto h = input.holds.find(path.nodes[i]);
        if (h != input.holds.end() && h->second > 0) boundary_nodes.insert(i);
    }
    for (const auto& m : mapped) boundary_nodes.insert(m.node_index);


    for (std::size_t n : boundary_nodes) {
        Boundary b;
        b.node_index = n;
        b.node = path.nodes[n];
        auto h = input.holds.find(b.node);
        if (h != input.holds.end() && h->second > 0) {
            b.dwell += h->second;
            if (n != 0) b.must_stop = true;
        }
        pt.boundaries.push_back(b);
    }
    if (input.start.kind == StartCondition::Kind::Standing) pt.boundaries.front().must_stop = true;
    for (const auto& m : mapped) {
        const std::size_t b = *pt.boundary_at(m.node_index);
        const auto& stop = input.stops[m.stop_index];
        StopRef ref{stop, b, false};
        ref.terminal = input.path_ends_run && m.stop_index + 1 == input.stops.size() && m.node_index == last_node;
        pt.boundaries[b].must_stop = true;
        if (!ref.terminal) pt.boundaries[b].dwell += stop.min_dwell;
        pt.stops.push_back(ref);
    }

    // Chains.
    pt.section_chain.assign(path.sections.size(), 0);
    for (std::size_t k = 0; k + 1 < pt.boundaries.size(); ++k) {
        ChainSpec c;
        c.first_section = pt.boundaries[k].node_index;
        c.last_section = pt.boundaries[k + 1].node_index - 1;
        c.chain.speed_limit = std::numeric_limits<double>::infinity();
        for (std::size_t i = c.first_section; i <= c.last_section; ++i) {
            const auto& sec = network.section(path.sections[i]);
            c.chain.section_ids.push_back(sec.id);
            c.section_start.push_back(c.chain.length);
            c.chain.length += sec.length;
            c.section_end.push_back(c.chain.length);
            c.chain.speed_limit = std::min(c.chain.speed_limit, sec.speed_limit);
            pt.section_chain[i] = k;
        }
        c.levels = make_level_set(c.chain, train, config.speed_fractions);
        pt.chains.push_back(std::move(c));
    }

    // Candidate speeds per boundary.
    const std::size_t nb = pt.boundaries.size();
    std::vector<std::vector<double>> base(nb);
    switch (input.start.kind) {
        case StartCondition::Kind::Standing: base[0] = {0.0}; break;
        case StartCondition::Kind::Passing:
        case StartCondition::Kind::Departed:
            base[0] = {snap(input.start.speed.value_or(0.0), pt.chains[0].levels)};
            break;
        case StartCondition::Kind::Free:
            if (input.start.speed) {
                base[0] = {snap(*input.start.speed, pt.chains[0].levels)};
            } else {
                base[0] = pt.chains[0].levels.levels;
            }
            break;
    }
    std::vector<std::size_t> free_interior;
    for (std::size_t b = 1; b < nb; ++b) {
        if (pt.boundaries[b].must_stop) {
            base[b] = {0.0};
        } else if (b + 1 == nb) {
            base[b] = pt.chains[b - 1].levels.levels;
        } else {
            base[b] = common_levels(pt.chains[b - 1].levels, pt.chains[b].levels);
            if (base[b].size() > 1) free_interior.push_back(b);
        }
    }

    struct Key {
        std::vector<char> waitable;
        std::vector<Time> run, entry, exit;
        auto operator<=>(const Key&) const = default;
    };
    std::set<Key> seen;
    const bool free_start = input.start.kind == StartCondition::Kind::Free ||
                            input.start.kind == StartCondition::Kind::Standing;

    auto add_plan = [&](const std::vector<double>& speeds, bool reduced) {
        Plan plan;
        plan.reduced = reduced;
        for (std::size_t k = 0; k + 1 < nb; ++k) {
            auto choice = best_peak(pt.chains[k], train, speeds[k], speeds[k + 1], reduced);
            auto profile = make_vprofile(pt.chains[k].chain, train, speeds[k], choice.peak, speeds[k + 1]);
            plan.run_time.push_back(profile.running_time);
            plan.profiles.push_back(std::move(profile));
        }
        plan.waitable.assign(nb, 0);
        for (std::size_t b = 0; b + 1 < nb; ++b) plan.waitable[b] = speeds[b] == 0.0 ? 1 : 0;
        if (free_start) plan.waitable[0] = 1;
        plan.entry_offset.assign(path.sections.size(), 0);
        plan.exit_offset.assign(path.sections.size(), 0);
        for (std::size_t i = 0; i < path.sections.size(); ++i) {
            const std::size_t k = pt.section_chain[i];
            const auto& c = pt.chains[k];
            const std::size_t local = i - c.first_section;
            plan.entry_offset[i] = std::min(floor_time(plan.profiles[k].time_at(c.section_start[local], train)),
                                            plan.run_time[k]);
            plan.exit_offset[i] =
                std::min(ceil_time(plan.profiles[k].time_at(c.section_end[local], train)), plan.run_time[k]);
        }
        Key key{plan.waitable, plan.run_time, plan.entry_offset, plan.exit_offset};
        if (!seen.insert(key).second) return;
        pt.plans.push_back(std::move(plan));
    };

    // Forced-stop subsets of the free interior boundaries, smallest first.
    const std::size_t nf = free_interior.size();
    for (std::size_t size = 0; size <= nf && pt.plans.size() < config.max_plans_per_path; ++size) {
        std::vector<char> pick(nf, 0);
        std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(size), 1);
        do {
            auto cand = base;
            for (std::size_t f = 0; f < nf; ++f) {
                if (pick[f]) cand[free_interior[f]] = {0.0};
            }
            for (bool reduced : {false, true}) {
                if (pt.plans.size() >= config.max_plans_per_path) break;
                if (auto speeds = fastest_speeds(pt.chains, train, cand, reduced)) add_plan(*speeds, reduced);
            }
            if (pt.plans.size() >= config.max_plans_per_path) break;
        } while (std::prev_permutation(pick.begin(), pick.end()));
    }
    if (pt.plans.empty()) {
        throw Error(ErrorCode::InfeasibleInput, "no velocity profile plan fits the path of " + train.id);
    }
    for (std::size_t i = 0; i < pt.plans.size(); ++i) pt.plans[i].rank = static_cast<int>(i);
    return pt;
}

double objective_of(const PathTiming& pt, const std::vector<Time>& arrive, const std::vector<Time>& depart,
                    double weight) {
    double total = 0.0;
    for (const auto& s : pt.stops) {
        if (!s.scheduled.is_customer_stop) continue;
        const Time late = s.terminal ? arrive[s.boundary] - s.scheduled.arrival
                                     : depart[s.boundary] - s.scheduled.departure;
        if (late > 0) total += weight * static_cast<double>(late);
    }
    return total;
}

Schedule evaluate(const PathTiming& pt, const Plan& plan, const StartCondition& start, double weight,
                  const std::vector<Time>* depart_lb) {
    const std::size_t nb = pt.boundaries.size();
    const std::size_t last = nb - 1;
    Schedule s;
    s.arrive.assign(nb, 0);
    s.depart.assign(nb, 0);
    std::vector<Time> lb(nb, kNoBound);
    if (depart_lb != nullptr) {
        for (std::size_t b = 0; b < nb && b < depart_lb->size(); ++b) lb[b] = std::max(lb[b], (*depart_lb)[b]);
    }
    for (const auto& stop : pt.stops) {
        if (stop.scheduled.is_customer_stop && !stop.terminal) {
            lb[stop.boundary] = std::max(lb[stop.boundary], stop.scheduled.departure);
        }
    }
    using Kind = StartCondition::Kind;
    const bool fixed_start = start.kind == Kind::Passing || start.kind == Kind::Departed;
    s.arrive[0] = start.kind == Kind::Free ? std::max(start.time, start.not_before) : start.time;

    std::size_t k = 0;
    while (true) {
        Time d = s.arrive[k];
        if (k == 0 && fixed_start) {
            d = start.time;
        } else {
            d = std::max({d + pt.boundaries[k].dwell, lb[k]});
            if (k == 0 && start.kind == Kind::Standing) d = std::max(d, start.not_before);
        }
        std::size_t w = k + 1;
        while (w < last && !plan.waitable[w]) ++w;
        Time cum = 0;
        for (std::size_t j = k + 1; j <= w; ++j) {
            cum += plan.run_time[j - 1];
            if (j < w || j == last) {
                if (lb[j] != kNoBound) d = std::max(d, lb[j] - cum);
            }
        }
        if (k == 0 && fixed_start && d != start.time) return s;  // infeasible
        if (k == 0 && fixed_start && lb[0] != kNoBound && lb[0] > start.time) return s;
        s.depart[k] = d;
        cum = 0;
        for (std::size_t j = k + 1; j <= w; ++j) {
            cum += plan.run_time[j - 1];
            s.arrive[j] = d + cum;
            if (j < w) s.depart[j] = s.arrive[j];
        }
        if (w == last) {
            s.depart[last] = s.arrive[last];
            break;
        }
        k = w;
    }
    s.feasible = true;
    s.objective = objective_of(pt, s.arrive, s.depart, weight);
    return s;
}

Time section_entry(const PathTiming& pt, const Plan& plan, const std::vector<Time>& depart, std::size_t section) {
    return depart[pt.section_chain[section]] + plan.entry_offset[section];
}

Time section_exit(const PathTiming& pt, const Plan& plan, const std::vector<Time>& arrive,
                  const std::vector<Time>& depart, std::size_t section) {
    const std::size_t k = pt.section_chain[section];
    if (pt.last_in_chain(section)) {
        return k + 2 == pt.boundaries.size() ? arrive[k + 1] : depart[k + 1];
    }
    return depart[k] + plan.exit_offset[section];
}

Trajectory make_trajectory(const Id& train_id, const PathTiming& pt, const Plan& plan, const std::vector<Time>& arrive,
                           const std::vector<Time>& depart) {
    Trajectory t;
    t.train_id = train_id;
    t.path = pt.path;
    const auto& path = pt.path;
    // Kinematics are not needed here beyond speeds at boundaries; interior nodes take
    // the entry time of the following section.
    for (std::size_t n = 0; n < path.nodes.size(); ++n) {
        NodePassage p;
        p.node = path.nodes[n];
        if (auto b = pt.boundary_at(n)) {
            p.arrive = arrive[*b];
            p.depart = depart[*b];
            p.speed_in = plan.boundary_speed(*b);
            p.speed_out = p.speed_in;
        } else {
            const std::size_t k = pt.section_chain[n];
            p.arrive = p.depart = depart[k] + plan.entry_offset[n];
            p.speed_in = p.speed_out = plan.profiles[k].peak_speed;
        }
        t.passages.push_back(p);
    }
    for (std::size_t i = 0; i < path.sections.size(); ++i) {
        t.occupations.push_back(
            {path.sections[i], section_entry(pt, plan, depart, i), section_exit(pt, plan, arrive, depart, i)});
    }
    for (const auto& s : pt.stops) {
        t.stops.push_back({s.scheduled, pt.boundaries[s.boundary].node, arrive[s.boundary],
                           s.terminal ? arrive[s.boundary] : depart[s.boundary], s.terminal});
    }
    return t;
}

StartCondition start_condition(const TrainSnapshotState& s, Time taken_at) {
    using Kind = timing::StartCondition::Kind;
    StartCondition start;
    if (!s.last_report) {
        start.kind = Kind::Free;
        start.time = s.earliest_start;
        start.not_before = taken_at;
        return start;
    }
    const auto& r = *s.last_report;
    start.time = r.time;
    start.speed = r.speed;
    start.not_before = taken_at;
    if (r.kind == PassKind::Depart) {
        start.kind = Kind::Departed;
    } else if (r.speed > 0.0) {
        start.kind = Kind::Passing;
    } else {
        start.kind = Kind::Standing;
    }
    return start;
}

std::optional<std::size_t> best_plan(const PathTiming& pt, const StartCondition& start, double weight,
                                     const std::vector<Time>* depart_lb) {
    std::optional<std::size_t> best;
    std::tuple<double, Time, int> best_key{};
    for (std::size_t i = 0; i < pt.plans.size(); ++i) {
        auto s = evaluate(pt, pt.plans[i], start, weight, depart_lb);
        if (!s.feasible) continue;
        std::tuple<double, Time, int> key{s.objective, s.arrive.back(), pt.plans[i].rank};
        if (!best || key < best_key) {
            best = i;
            best_key = key;
        }
    }
    return best;
}

}  // namespace ada::timing
