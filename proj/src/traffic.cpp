#include "ada/traffic.hpp"

#include <algorithm>
#include <set>

#include "ada/timing.hpp"

namespace ada {

const Train& WorldState::train(const Id& id) const {
    for (const auto& t : trains) {
        if (t.id == id) return t;
    }
    throw Error(ErrorCode::UnknownTrain, id);
}

const TrainRun& WorldState::run(const Id& train_id) const {
    for (const auto& r : runs) {
        if (r.train_id == train_id) return r;
    }
    throw Error(ErrorCode::UnknownTrain, "no run for " + train_id);
}

const TrainSnapshotState* Snapshot::find_train(const Id& id) const {
    for (const auto& s : train_states) {
        if (s.train.id == id) return &s;
    }
    return nullptr;
}

Time StopVisit::delay() const {
    const Time late = terminal ? arrive - scheduled.arrival : depart - scheduled.departure;
    return std::max<Time>(0, late);
}

const NodePassage* Trajectory::passage(const Id& node) const {
    for (const auto& p : passages) {
        if (p.node == node) return &p;
    }
    return nullptr;
}

const SectionOccupation* Trajectory::occupation(const Id& section) const {
    for (const auto& o : occupations) {
        if (o.section == section) return &o;
    }
    return nullptr;
}

bool splice_path(Path& base, const Path& detour) {
    if (detour.sections.empty()) return false;
    auto first = std::find(base.nodes.begin(), base.nodes.end(), detour.nodes.front());
    if (first == base.nodes.end()) return false;
    auto last = std::find(first, base.nodes.end(), detour.nodes.back());
    if (last == base.nodes.end()) return false;
    const auto i = static_cast<std::size_t>(first - base.nodes.begin());
    const auto j = static_cast<std::size_t>(last - base.nodes.begin());
    Path out;
    out.nodes.assign(base.nodes.begin(), base.nodes.begin() + static_cast<std::ptrdiff_t>(i));
    out.sections.assign(base.sections.begin(), base.sections.begin() + static_cast<std::ptrdiff_t>(i));
    out.nodes.insert(out.nodes.end(), detour.nodes.begin(), detour.nodes.end());
    out.sections.insert(out.sections.end(), detour.sections.begin(), detour.sections.end());
    out.nodes.insert(out.nodes.end(), base.nodes.begin() + static_cast<std::ptrdiff_t>(j) + 1, base.nodes.end());
    out.sections.insert(out.sections.end(), base.sections.begin() + static_cast<std::ptrdiff_t>(j), base.sections.end());
    base = std::move(out);
    return true;
}

Path planned_path(const Network& network, const TrainRun& run, const std::vector<SetRoute>& set_routes) {
    auto base = network.resolve_route(run.scheduled_route_id);
    if (!base || base->nodes.front() != run.entry_signal || base->nodes.back() != run.exit_signal) {
        throw Error(ErrorCode::MalformedDocument,
                    "scheduled route '" + run.scheduled_route_id + "' of " + run.train_id + " does not connect its run");
    }
    std::vector<SetRoute> ordered;
    for (const auto& sr : set_routes) {
        if (sr.train_id == run.train_id) ordered.push_back(sr);
    }
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const SetRoute& a, const SetRoute& b) { return a.set_at < b.set_at; });
    for (const auto& sr : ordered) {
        if (auto detour = network.resolve_route(sr.route_id)) splice_path(*base, *detour);
    }
    return *base;
}

namespace {

// Node index on `path` where each stop is served (end of the station's platform section).
std::vector<std::optional<std::size_t>> stop_nodes(const Network& network, const Path& path,
                                                   const std::vector<ScheduledStop>& stops) {
    std::vector<std::optional<std::size_t>> out;
    std::size_t from = 0;
    for (const auto& stop : stops) {
        std::optional<std::size_t> found;
        for (std::size_t i = from; i < path.sections.size(); ++i) {
            const Station* st = network.station_of_section(path.sections[i]);
            if (st != nullptr && st->id == stop.station_id) {
                found = i + 1;
                from = i + 1;
                break;
            }
        }
        out.push_back(found);
    }
    return out;
}

bool fully_restricted(const std::vector<AvailabilityRestriction>& restrictions, const Id& section, Interval span) {
    std::vector<Interval> windows;
    for (const auto& r : restrictions) {
        if (r.section_id == section) windows.push_back(r.window);
    }
    std::sort(windows.begin(), windows.end(), [](const Interval& a, const Interval& b) { return a.start < b.start; });
    Time covered = span.start;
    for (const auto& w : windows) {
        if (w.start > covered) break;
        covered = std::max(covered, w.end);
        if (covered >= span.end) return true;
    }
    return false;
}

Time lag_for(const Network& network, const Id& section, const TimingConfig& config) {
    const auto* s = network.find_section(section);
    const Time headway = s != nullptr && s->headway ? *s->headway : config.headway;
    return headway + config.release_margin;
}

}  // namespace

TrainSnapshotState snapshot_state(const WorldState& world, const Network& network, const Id& train_id) {
    const auto& dyn = world.states.at(train_id);
    TrainSnapshotState s;
    s.train = world.train(train_id);
    s.run = world.run(train_id);
    s.last_report = dyn.last_report;
    s.current_section = dyn.current_section;
    for (const auto& sr : world.set_routes) {
        if (sr.train_id == train_id) s.set_routes.push_back(sr);
    }
    const Path& full = dyn.path;
    const std::size_t pos = dyn.last_report ? dyn.path_pos : 0;
    s.remaining_path.nodes.assign(full.nodes.begin() + static_cast<std::ptrdiff_t>(pos), full.nodes.end());
    s.remaining_path.sections.assign(full.sections.begin() + static_cast<std::ptrdiff_t>(pos), full.sections.end());
    const auto nodes = stop_nodes(network, full, s.run.stops);
    for (std::size_t i = 0; i < s.run.stops.size(); ++i) {
        if (!nodes[i]) continue;
        const bool ahead = *nodes[i] > pos;
        const bool here = *nodes[i] == pos && dyn.last_report && dyn.last_report->kind == PassKind::Arrive &&
                          dyn.last_report->speed == 0.0;
        if (!dyn.last_report || ahead || here) s.remaining_stops.push_back(s.run.stops[i]);
    }
    s.earliest_start = s.run.scheduled_entry;
    s.holds = dyn.holds;
    return s;
}

std::vector<Trajectory> prognosis(const Snapshot& snapshot, const Network& network, const TimingConfig& config) {
    std::vector<AvailabilityRestriction> restrictions(network.restrictions().begin(), network.restrictions().end());
    restrictions.insert(restrictions.end(), snapshot.active_restrictions.begin(), snapshot.active_restrictions.end());
    const Interval span{snapshot.taken_at, snapshot.taken_at + std::max<Time>(snapshot.horizon, 1)};

    std::map<Id, Trajectory> done;
    std::vector<const TrainSnapshotState*> pending;
    for (const auto& s : snapshot.train_states) {
        if (s.remaining_path.sections.empty()) continue;
        for (const auto& sec : s.remaining_path.sections) {
            if (fully_restricted(restrictions, sec, span)) {
                throw Error(ErrorCode::NoFeasiblePath,
                            "section '" + sec + "' on the route of " + s.train.id + " is closed for the horizon");
            }
        }
        pending.push_back(&s);
    }

    auto predecessors_done = [&](const Id& train) {
        for (const auto& fo : snapshot.forced_orders) {
            if (fo.second == train && !done.contains(fo.first) && snapshot.find_train(fo.first) != nullptr &&
                std::any_of(pending.begin(), pending.end(),
                            [&](const TrainSnapshotState* p) { return p->train.id == fo.first; })) {
                return false;
            }
        }
        return true;
    };

    while (!pending.empty()) {
        auto it = std::find_if(pending.begin(), pending.end(),
                               [&](const TrainSnapshotState* p) { return predecessors_done(p->train.id); });
        const bool cyclic = it == pending.end();
        if (cyclic) it = pending.begin();
        const TrainSnapshotState& s = **it;

        timing::TrainPathInput input;
        input.train = &s.train;
        input.path = s.remaining_path;
        input.stops = s.remaining_stops;
        input.holds = s.holds;
        input.current_section = s.current_section;
        input.start = timing::start_condition(s, snapshot.taken_at);
        input.path_ends_run = true;
        const auto pt = timing::build_path_timing(network, input, config);

        // Section-entry lower bounds from realized orders.
        std::vector<std::pair<std::size_t, Time>> entry_lb;
        if (!cyclic) {
            for (const auto& fo : snapshot.forced_orders) {
                if (fo.second != s.train.id || !done.contains(fo.first)) continue;
                const auto* occ = done.at(fo.first).occupation(fo.section);
                auto pos = std::find(pt.path.sections.begin(), pt.path.sections.end(), fo.section);
                if (occ == nullptr || pos == pt.path.sections.end()) continue;
                entry_lb.emplace_back(static_cast<std::size_t>(pos - pt.path.sections.begin()),
                                      occ->exit + lag_for(network, fo.section, config));
            }
        }

        std::optional<std::size_t> best;
        std::tuple<double, Time, int> best_key{};
        timing::Schedule best_schedule;
        for (std::size_t p = 0; p < pt.plans.size(); ++p) {
            const auto& plan = pt.plans[p];
            std::vector<Time> lb(pt.boundaries.size(), std::numeric_limits<Time>::min() / 4);
            for (const auto& [sec, t] : entry_lb) {
                const std::size_t k = pt.section_chain[sec];
                lb[k] = std::max(lb[k], t - plan.entry_offset[sec]);
            }
            auto sched = timing::evaluate(pt, plan, input.start, s.train.priority_weight, &lb);
            if (!sched.feasible) continue;
            std::tuple<double, Time, int> key{sched.objective, sched.arrive.back(), plan.rank};
            if (!best || key < best_key) {
                best = p;
                best_key = key;
                best_schedule = std::move(sched);
            }
        }
        if (!best) {
            throw Error(ErrorCode::NoFeasiblePath, "no feasible running plan for " + s.train.id);
        }
        auto traj = timing::make_trajectory(s.train.id, pt, pt.plans[*best], best_schedule.arrive, best_schedule.depart);
        if (s.current_section && s.last_report) {
            traj.occupations.insert(traj.occupations.begin(),
                                    {*s.current_section, s.last_report->time, best_schedule.depart.front()});
        }
        done.emplace(s.train.id, std::move(traj));
        pending.erase(it);
    }

    std::vector<Trajectory> out;
    for (auto& [id, t] : done) out.push_back(std::move(t));
    return out;
}

Snapshot build_snapshot(const WorldState& world, const Network& network, const ObservationArea& area, Time horizon,
                        const TimingConfig& config) {
    if (horizon <= 0) throw Error(ErrorCode::MalformedDocument, "horizon must be positive");
    if (area.id.empty() || area.section_ids.empty()) throw Error(ErrorCode::UnknownArea, "empty area");
    for (const auto& s : area.section_ids) {
        if (network.find_section(s) == nullptr) throw Error(ErrorCode::UnknownArea, area.id + " section " + s);
    }

    Snapshot all;
    all.taken_at = world.clock;
    all.horizon = horizon;
    for (const auto& [id, dyn] : world.states) {
        if (dyn.finished) continue;
        all.train_states.push_back(snapshot_state(world, network, id));
    }
    all.forced_orders = world.realized_orders;
    const auto predicted = prognosis(all, network, config);

    const auto sections = area.section_set();
    const Time window_end = world.clock + horizon;
    std::set<Id> included;
    for (const auto& t : predicted) {
        for (const auto& occ : t.occupations) {
            if (sections.contains(occ.section) && occ.entry <= window_end && occ.exit >= world.clock) {
                included.insert(t.train_id);
                break;
            }
        }
    }

    Snapshot snap;
    snap.taken_at = world.clock;
    snap.area_id = area.id;
    snap.horizon = horizon;
    snap.area = area;
    for (auto& s : all.train_states) {
        if (included.contains(s.train.id)) snap.train_states.push_back(std::move(s));
    }
    std::sort(snap.train_states.begin(), snap.train_states.end(),
              [](const TrainSnapshotState& a, const TrainSnapshotState& b) { return a.train.id < b.train.id; });
    for (const auto& r : network.restrictions()) {
        if (sections.contains(r.section_id) && r.window.end > world.clock) snap.active_restrictions.push_back(r);
    }
    for (const auto& fo : world.realized_orders) {
        if (included.contains(fo.first) && included.contains(fo.second)) snap.forced_orders.push_back(fo);
    }
    return snap;
}

}  // namespace ada
