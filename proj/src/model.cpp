#include <algorithm>
#include <deque>
#include <limits>
#include <set>
#include <tuple>

#include "ada/optimizer.hpp"
#include "model_internal.hpp"

namespace ada {

namespace {

constexpr Time kUnset = std::numeric_limits<Time>::min() / 4;

Time lag_of(const Network& network, const Id& section, const TimingConfig& config) {
    const auto* s = network.find_section(section);
    return (s != nullptr && s->headway ? *s->headway : config.headway) + config.release_margin;
}

bool contains_run(const std::vector<Id>& haystack, const std::vector<Id>& needle, std::size_t& at) {
    if (needle.empty() || needle.size() > haystack.size()) return false;
    auto it = std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end());
    if (it == haystack.end()) return false;
    at = static_cast<std::size_t>(it - haystack.begin());
    return true;
}

OccupationSlot section_slot(const timing::PathTiming& pt, const timing::Plan& plan, std::size_t first,
                            std::size_t last) {
    OccupationSlot slot;
    slot.entry_boundary = pt.section_chain[first];
    slot.entry_offset = plan.entry_offset[first];
    const std::size_t k = pt.section_chain[last];
    if (pt.last_in_chain(last)) {
        slot.exit_boundary = k + 1;
        slot.exit_is_arrival = k + 2 == pt.boundaries.size();
        slot.exit_offset = 0;
    } else {
        slot.exit_boundary = k;
        slot.exit_offset = plan.exit_offset[last];
    }
    return slot;
}

std::vector<OccupationSlot> slots_for(const Network& network, const timing::PathTiming& pt,
                                      const timing::Plan& plan, const TimingConfig& config,
                                      const std::optional<SectionOccupation>& tail) {
    std::vector<OccupationSlot> slots;
    for (std::size_t i = 0; i < pt.path.sections.size(); ++i) {
        auto slot = section_slot(pt, plan, i, i);
        slot.resource = pt.path.sections[i];
        slot.lag = lag_of(network, slot.resource, config);
        slots.push_back(std::move(slot));
    }
    for (const auto& ex : network.exclusions()) {
        const std::array<const Route*, 2> routes{network.find_route(ex.route_a), network.find_route(ex.route_b)};
        if (routes[0] == nullptr || routes[1] == nullptr) continue;
        const Id key = std::min(ex.route_a, ex.route_b) + "|" + std::max(ex.route_a, ex.route_b);
        for (int side = 0; side < 2; ++side) {
            const Route& r = *routes[static_cast<std::size_t>(side)];
            std::size_t at = 0;
            if (!contains_run(pt.path.sections, r.section_ids, at)) continue;
            auto slot = section_slot(pt, plan, at, at + r.section_ids.size() - 1);
            slot.resource = key;
            slot.side = (r.id == std::min(ex.route_a, ex.route_b)) ? 0 : 1;
            slot.lag = config.headway + config.release_margin;
            slots.push_back(std::move(slot));
        }
    }
    if (tail) {
        OccupationSlot slot;
        slot.resource = tail->section;
        slot.fixed_entry = tail->entry;
        slot.exit_boundary = 0;
        slot.lag = lag_of(network, tail->section, config);
        slots.push_back(std::move(slot));
    }
    return slots;
}

bool visits_station(const Network& network, const Path& path, const Id& station) {
    return std::any_of(path.sections.begin(), path.sections.end(), [&](const Id& s) {
        const Station* st = network.station_of_section(s);
        return st != nullptr && st->id == station;
    });
}

}  // namespace

std::optional<std::size_t> Model::train_index(const Id& id) const {
    for (std::size_t i = 0; i < trains.size(); ++i) {
        if (trains[i].id == id) return i;
    }
    return std::nullopt;
}

Model build_model(const Snapshot& snapshot, const Network& network, const TimingConfig& config,
                  const ModelOptions& options) {
    Model model;
    model.taken_at = snapshot.taken_at;
    model.area_id = snapshot.area_id;
    model.config = config;

    std::set<Id> area = snapshot.area.section_set();
    if (area.empty()) {
        for (const auto& s : network.sections()) area.insert(s.id);
    }
    const auto predicted = prognosis(snapshot, network, config);
    std::map<Id, const Trajectory*> predicted_by_id;
    for (const auto& t : predicted) predicted_by_id[t.train_id] = &t;

    for (const auto& s : snapshot.train_states) {
        const Path& rp = s.remaining_path;
        std::size_t f = 0;
        while (f < rp.sections.size() && !area.contains(rp.sections[f])) ++f;
        if (f == rp.sections.size()) continue;
        std::size_t e = f;
        while (e < rp.sections.size() && area.contains(rp.sections[e])) ++e;

        Path portion;
        portion.nodes.assign(rp.nodes.begin() + static_cast<std::ptrdiff_t>(f),
                             rp.nodes.begin() + static_cast<std::ptrdiff_t>(e) + 1);
        portion.sections.assign(rp.sections.begin() + static_cast<std::ptrdiff_t>(f),
                                rp.sections.begin() + static_cast<std::ptrdiff_t>(e));

        ModelTrain mt;
        mt.id = s.train.id;
        mt.train = s.train;
        mt.weight = s.train.priority_weight;
        if (f == 0) {
            mt.start = timing::start_condition(s, snapshot.taken_at);
            if (s.current_section && s.last_report && area.contains(*s.current_section)) {
                mt.tail = SectionOccupation{*s.current_section, s.last_report->time, s.last_report->time};
            }
        } else {
            const auto* traj = predicted_by_id.at(s.train.id);
            const auto* passage = traj->passage(portion.nodes.front());
            mt.start.kind = timing::StartCondition::Kind::Free;
            mt.start.time = passage != nullptr ? passage->arrive : snapshot.taken_at;
            mt.start.not_before = snapshot.taken_at;
            for (const auto& h : snapshot.boundary_constraints) {
                if (h.train_id == mt.id && h.entry_node == portion.nodes.front()) {
                    mt.start.time = std::max(mt.start.time, h.earliest_entry);
                    mt.start.speed = h.entry_speed;
                }
            }
        }

        // Route alternatives: the planned portion first, then other area paths that
        // keep the stops and the set routes.
        std::vector<Path> alternatives{portion};
        const bool fixed_first = mt.start.kind == timing::StartCondition::Kind::Passing ||
                                 mt.start.kind == timing::StartCondition::Kind::Departed;
        std::vector<Id> stop_stations;
        for (const auto& stop : s.remaining_stops) {
            if (visits_station(network, portion, stop.station_id)) stop_stations.push_back(stop.station_id);
        }
        std::vector<std::vector<Id>> required_runs;
        for (const auto& sr : s.set_routes) {
            if (auto rpath = network.resolve_route(sr.route_id)) {
                std::size_t at = 0;
                if (contains_run(portion.sections, rpath->sections, at)) required_runs.push_back(rpath->sections);
            }
        }
        if (options.max_paths > 1) {
            for (auto& p : enumerate_paths(network, portion.nodes.front(), portion.nodes.back(), &area)) {
                if (alternatives.size() >= options.max_paths) break;
                if (p == portion) continue;
                if (fixed_first && p.sections.front() != portion.sections.front()) continue;
                if (mt.tail && p.sections.front() == mt.tail->section) continue;
                bool ok = std::all_of(stop_stations.begin(), stop_stations.end(),
                                      [&](const Id& st) { return visits_station(network, p, st); });
                for (const auto& run : required_runs) {
                    std::size_t at = 0;
                    ok = ok && contains_run(p.sections, run, at);
                }
                if (ok) alternatives.push_back(std::move(p));
            }
        }

        const bool ends_run = e == rp.sections.size();
        for (const auto& path : alternatives) {
            timing::TrainPathInput input;
            input.train = &mt.train;
            input.path = path;
            input.stops = s.remaining_stops;
            input.holds = s.holds;
            input.current_section = f == 0 ? s.current_section : std::nullopt;
            input.start = mt.start;
            input.path_ends_run = ends_run;
            try {
                mt.paths.push_back(timing::build_path_timing(network, input, config));
            } catch (const Error& err) {
                if (err.code() != ErrorCode::InfeasibleInput) throw;
            }
        }
        if (mt.paths.empty()) {
            throw Error(ErrorCode::InfeasibleInput, "train " + mt.id + " has no route alternative in the area");
        }

        for (std::size_t p = 0; p < mt.paths.size(); ++p) {
            const auto& pt = mt.paths[p];
            for (std::size_t q = 0; q < pt.plans.size(); ++q) {
                auto sched = timing::evaluate(pt, pt.plans[q], mt.start, mt.weight);
                if (!sched.feasible) continue;
                Mode m;
                m.path = p;
                m.plan = q;
                m.standalone = std::move(sched);
                m.slots = slots_for(network, pt, pt.plans[q], config, mt.tail);
                mt.modes.push_back(std::move(m));
            }
        }
        if (mt.modes.empty()) {
            throw Error(ErrorCode::InfeasibleInput, "train " + mt.id + " has no feasible profile alternative");
        }
        std::stable_sort(mt.modes.begin(), mt.modes.end(), [&](const Mode& a, const Mode& b) {
            return std::make_tuple(a.standalone.objective, a.standalone.arrive.back(), a.path,
                                   mt.paths[a.path].plans[a.plan].rank) <
                   std::make_tuple(b.standalone.objective, b.standalone.arrive.back(), b.path,
                                   mt.paths[b.path].plans[b.plan].rank);
        });
        model.trains.push_back(std::move(mt));
    }

    for (const auto& fo : snapshot.forced_orders) {
        auto a = model.train_index(fo.first);
        auto b = model.train_index(fo.second);
        if (a && b && *a != *b) model.forced.push_back({*a, *b, fo.section});
    }
    std::set<std::tuple<std::size_t, std::size_t, Id>> forced_keys;
    for (std::size_t i = 0; i < model.trains.size(); ++i) {
        const auto& ti = model.trains[i];
        if (!ti.tail) continue;
        for (std::size_t j = 0; j < model.trains.size(); ++j) {
            const auto& tj = model.trains[j];
            if (j == i || (tj.tail && tj.tail->section == ti.tail->section)) continue;
            const bool uses = std::any_of(tj.modes.begin(), tj.modes.end(), [&](const Mode& m) {
                return detail::find_slot(m, ti.tail->section, true).has_value();
            });
            if (uses) model.forced.push_back({i, j, ti.tail->section});
        }
    }
    for (const auto& f : model.forced) {
        forced_keys.insert({std::min(f.first, f.second), std::max(f.first, f.second), f.resource});
    }

    std::map<Id, int> rids;
    for (auto& t : model.trains) {
        for (auto& m : t.modes) {
            for (auto& slot : m.slots) {
                auto [it, fresh] = rids.emplace(slot.resource, static_cast<int>(model.resources.size()));
                if (fresh) model.resources.push_back(slot.resource);
                slot.rid = it->second;
            }
        }
    }

    for (const auto& r : snapshot.active_restrictions) {
        if (area.contains(r.section_id) && r.window.end > snapshot.taken_at) {
            model.restrictions.push_back({r.section_id, r.window});
        }
    }

    for (std::size_t i = 0; i < model.trains.size(); ++i) {
        for (std::size_t j = i + 1; j < model.trains.size(); ++j) {
            std::set<Id> shared;
            for (const auto& mi : model.trains[i].modes) {
                for (const auto& si : mi.slots) {
                    if (si.fixed_entry) continue;
                    for (const auto& mj : model.trains[j].modes) {
                        for (const auto& sj : mj.slots) {
                            if (!sj.fixed_entry && detail::competing(si, sj)) shared.insert(si.resource);
                        }
                    }
                }
            }
            for (const auto& r : shared) {
                if (!forced_keys.contains({i, j, r})) model.disjunctions.push_back({i, j, r});
            }
        }
    }
    return model;
}

ModeChoice describe_mode(const ModelTrain& train, std::size_t mode) {
    const Mode& m = train.modes.at(mode);
    const auto& pt = train.paths[m.path];
    const auto& plan = pt.plans[m.plan];
    ModeChoice c;
    c.route_id = pt.route_id;
    c.reduced = plan.reduced;
    c.plan_rank = plan.rank;
    for (std::size_t b = 1; b + 1 < pt.boundaries.size(); ++b) {
        if (!pt.boundaries[b].must_stop && plan.boundary_speed(b) == 0.0) c.stop_nodes.push_back(pt.boundaries[b].node);
    }
    const auto& first = plan.profiles.front();
    const auto& levels = pt.chains.front().levels.levels;
    auto level_index = [&](double v) {
        std::size_t best = 0;
        for (std::size_t i = 0; i < levels.size(); ++i) {
            if (std::abs(levels[i] - v) < std::abs(levels[best] - v)) best = i;
        }
        return static_cast<int>(best);
    };
    c.first_chain_levels = {level_index(first.entry_speed), level_index(first.peak_speed),
                            level_index(first.exit_speed)};
    return c;
}

std::optional<std::size_t> match_mode(const ModelTrain& train, const ModeChoice& choice) {
    // Same route (or a remaining suffix of it), same voluntary stops still ahead, same
    // reduced flag; fall back to the best mode on the route.
    auto route_matches = [&](const timing::PathTiming& pt) {
        if (pt.route_id == choice.route_id) return true;
        const std::string& id = choice.route_id;
        return id.size() > pt.route_id.size() && id.compare(id.size() - pt.route_id.size(), std::string::npos,
                                                            pt.route_id) == 0 &&
               id[id.size() - pt.route_id.size() - 1] == '+';
    };
    std::optional<std::size_t> fallback;
    for (std::size_t i = 0; i < train.modes.size(); ++i) {
        const auto& pt = train.paths[train.modes[i].path];
        if (!route_matches(pt)) continue;
        if (!fallback) fallback = i;
        auto c = describe_mode(train, i);
        std::vector<Id> ahead;
        for (const auto& n : choice.stop_nodes) {
            if (std::find(pt.path.nodes.begin() + 1, pt.path.nodes.end(), n) != pt.path.nodes.end()) ahead.push_back(n);
        }
        if (c.stop_nodes == ahead && c.reduced == choice.reduced) return i;
    }
    return fallback;
}

const Trajectory* Solution::trajectory(const Id& train) const {
    for (const auto& t : trajectories) {
        if (t.train_id == train) return &t;
    }
    return nullptr;
}

namespace detail {

const Mode& mode_of(const Model& m, std::size_t train, int mode) {
    return m.trains[train].modes[static_cast<std::size_t>(mode < 0 ? 0 : mode)];
}

std::optional<std::size_t> find_slot(const Mode& mode, const Id& resource, bool movable_only) {
    for (std::size_t i = 0; i < mode.slots.size(); ++i) {
        if (mode.slots[i].resource == resource && !(movable_only && mode.slots[i].fixed_entry)) return i;
    }
    return std::nullopt;
}

bool competing(const OccupationSlot& a, const OccupationSlot& b) {
    if (a.resource != b.resource) return false;
    return a.side < 0 || b.side < 0 || a.side != b.side;
}

Time slot_entry(const OccupationSlot& slot, const Times& t) {
    if (slot.fixed_entry) return *slot.fixed_entry;
    return t.depart[slot.entry_boundary] + slot.entry_offset;
}

Time slot_exit(const OccupationSlot& slot, const Times& t) {
    return (slot.exit_is_arrival ? t.arrive[slot.exit_boundary] : t.depart[slot.exit_boundary]) + slot.exit_offset;
}

double train_objective(const ModelTrain& train, const Mode& mode, const Times& t) {
    return timing::objective_of(train.paths[mode.path], t.arrive, t.depart, train.weight);
}

Trajectory trajectory_of(const ModelTrain& train, const Mode& mode, const Times& t) {
    const auto& pt = train.paths[mode.path];
    auto traj = timing::make_trajectory(train.id, pt, pt.plans[mode.plan], t.arrive, t.depart);
    if (train.tail) {
        traj.occupations.insert(traj.occupations.begin(), {train.tail->section, train.tail->entry, t.depart.front()});
    }
    return traj;
}

namespace {

struct Edge {
    int to;
    Time w;
};

struct Ref {
    int node;  // 0 = time origin
    Time offset;
};

}  // namespace

bool relax(const Model& m, const std::vector<int>& modes, const std::vector<OrderRef>& orders,
           const std::vector<RestrictionRef>& restrictions, std::vector<Times>& times) {
    const std::size_t n = m.trains.size();
    times.assign(n, {});
    std::vector<int> base(n, -1);
    int count = 1;
    for (std::size_t i = 0; i < n; ++i) {
        const Mode& mode = mode_of(m, i, modes[i]);
        if (modes[i] < 0) {
            times[i] = {mode.standalone.arrive, mode.standalone.depart};
            continue;
        }
        base[i] = count;
        count += 2 * static_cast<int>(m.trains[i].paths[mode.path].boundaries.size());
    }
    std::vector<std::vector<Edge>> adj(static_cast<std::size_t>(count));
    auto edge = [&](int u, int v, Time w) { adj[static_cast<std::size_t>(u)].push_back({v, w}); };
    auto A = [&](std::size_t i, std::size_t b) { return base[i] + 2 * static_cast<int>(b); };
    auto D = [&](std::size_t i, std::size_t b) { return base[i] + 2 * static_cast<int>(b) + 1; };

    using Kind = timing::StartCondition::Kind;
    for (std::size_t i = 0; i < n; ++i) {
        if (base[i] < 0) continue;
        const auto& tr = m.trains[i];
        const Mode& mode = mode_of(m, i, modes[i]);
        const auto& pt = tr.paths[mode.path];
        const auto& plan = pt.plans[mode.plan];
        const std::size_t nb = pt.boundaries.size();
        const auto& st = tr.start;
        const bool fixed = st.kind == Kind::Passing || st.kind == Kind::Departed;
        if (st.kind == Kind::Free) {
            edge(0, A(i, 0), std::max(st.time, st.not_before));
        } else {
            edge(0, A(i, 0), st.time);
            edge(A(i, 0), 0, -st.time);
        }
        if (fixed) {
            edge(0, D(i, 0), st.time);
            edge(D(i, 0), 0, -st.time);
        } else if (st.kind == Kind::Standing) {
            edge(0, D(i, 0), st.not_before);
        }
        for (std::size_t b = 0; b < nb; ++b) {
            const bool last = b + 1 == nb;
            if (!(b == 0 && fixed)) edge(A(i, b), D(i, b), last ? 0 : pt.boundaries[b].dwell);
            if (last || !plan.waitable[b]) edge(D(i, b), A(i, b), 0);
            if (!last) {
                edge(D(i, b), A(i, b + 1), plan.run_time[b]);
                edge(A(i, b + 1), D(i, b), -plan.run_time[b]);
            }
        }
        for (const auto& stop : pt.stops) {
            if (stop.scheduled.is_customer_stop && !stop.terminal) {
                edge(0, D(i, stop.boundary), stop.scheduled.departure);
            }
        }
    }

    auto entry_ref = [&](std::size_t i, const OccupationSlot& s) -> Ref {
        if (s.fixed_entry) return {0, *s.fixed_entry};
        return {D(i, s.entry_boundary), s.entry_offset};
    };
    auto exit_ref = [&](std::size_t i, const OccupationSlot& s) -> Ref {
        return {s.exit_is_arrival ? A(i, s.exit_boundary) : D(i, s.exit_boundary), s.exit_offset};
    };
    auto add_order = [&](std::size_t i, const OccupationSlot& si, std::size_t j, const OccupationSlot& sj) {
        const Ref x = exit_ref(i, si);
        const Ref y = entry_ref(j, sj);
        edge(x.node, y.node, x.offset + std::max(si.lag, sj.lag) - y.offset);
    };
    for (const auto& o : orders) {
        const auto& si = mode_of(m, o.first.train, modes[o.first.train]).slots[o.first.slot];
        const auto& sj = mode_of(m, o.second.train, modes[o.second.train]).slots[o.second.slot];
        add_order(o.first.train, si, o.second.train, sj);
    }
    for (const auto& f : m.forced) {
        if (base[f.first] < 0 || base[f.second] < 0) continue;
        const Mode& mf = mode_of(m, f.first, modes[f.first]);
        const Mode& ms = mode_of(m, f.second, modes[f.second]);
        auto a = find_slot(mf, f.resource, false);
        auto b = find_slot(ms, f.resource, true);
        if (a && b) add_order(f.first, mf.slots[*a], f.second, ms.slots[*b]);
    }
    for (const auto& r : restrictions) {
        const auto& slot = mode_of(m, r.train, modes[r.train]).slots[r.slot];
        const auto& window = m.restrictions[r.restriction].window;
        if (r.before) {
            const Ref x = exit_ref(r.train, slot);
            edge(x.node, 0, x.offset + m.config.release_margin - window.start);
        } else {
            const Ref y = entry_ref(r.train, slot);
            edge(0, y.node, window.end - y.offset);
        }
    }

    // Longest paths from the time origin; a positive cycle means the constraints contradict.
    std::vector<Time> dist(static_cast<std::size_t>(count), kUnset);
    std::vector<int> relaxed(static_cast<std::size_t>(count), 0);
    std::vector<char> queued(static_cast<std::size_t>(count), 0);
    std::deque<int> queue{0};
    dist[0] = 0;
    queued[0] = 1;
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        queued[static_cast<std::size_t>(u)] = 0;
        for (const auto& e : adj[static_cast<std::size_t>(u)]) {
            const Time cand = dist[static_cast<std::size_t>(u)] + e.w;
            auto& dv = dist[static_cast<std::size_t>(e.to)];
            if (dv != kUnset && cand <= dv) continue;
            if (e.to == 0) return false;
            dv = cand;
            if (++relaxed[static_cast<std::size_t>(e.to)] > count) return false;
            if (!queued[static_cast<std::size_t>(e.to)]) {
                queued[static_cast<std::size_t>(e.to)] = 1;
                queue.push_back(e.to);
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (base[i] < 0) continue;
        const Mode& mode = mode_of(m, i, modes[i]);
        const std::size_t nb = m.trains[i].paths[mode.path].boundaries.size();
        times[i].arrive.resize(nb);
        times[i].depart.resize(nb);
        for (std::size_t b = 0; b < nb; ++b) {
            times[i].arrive[b] = dist[static_cast<std::size_t>(A(i, b))];
            times[i].depart[b] = dist[static_cast<std::size_t>(D(i, b))];
        }
    }
    return true;
}

}  // namespace detail

}  // namespace ada
