#include <algorithm>
#include <limits>

#include "ada/optimizer.hpp"
#include "ada/sim.hpp"
#include "ada/timing.hpp"

namespace ada {

namespace {

constexpr Time kPlanHorizon = 6 * 3600;

struct PendingEvent {
    Time time = 0;
    Id train;
    std::size_t node_index = 0;  // into the full path
    PassKind kind = PassKind::Arrive;
    double speed = 0.0;

    auto key() const { return std::make_tuple(time, train, node_index, kind == PassKind::Depart); }
};

}  // namespace

WorldState initial_world(const Scenario& scenario) {
    WorldState w;
    w.clock = scenario.start_time;
    w.trains = scenario.trains;
    w.runs = scenario.runs;
    w.set_routes = scenario.set_routes;
    w.pending_injections = scenario.injections;
    for (const auto& run : scenario.runs) {
        std::vector<SetRoute> own;
        for (const auto& r : scenario.set_routes) {
            if (r.train_id == run.train_id) own.push_back(r);
        }
        TrainDynamicState s;
        s.path = planned_path(scenario.network, run, own);
        w.states[run.train_id] = std::move(s);
    }
    return w;
}

Simulator::Simulator(Scenario scenario, TimingConfig config)
    : scenario_(std::move(scenario)), config_(std::move(config)), world_(initial_world(scenario_)) {
    activate_injections();
    replan();
    update_kinematics();
}

bool Simulator::hold_fits(const Id& train_id) const {
    const auto st = snapshot_state(world_, scenario_.network, train_id);
    if (st.remaining_path.sections.empty()) return true;
    timing::TrainPathInput input;
    input.train = &st.train;
    input.path = st.remaining_path;
    input.stops = st.remaining_stops;
    input.holds = st.holds;
    input.current_section = st.current_section;
    input.start = timing::start_condition(st, world_.clock);
    try {
        timing::build_path_timing(scenario_.network, input, config_);
    } catch (const Error&) {
        return false;
    }
    return true;
}

void Simulator::activate_injections() {
    std::vector<DelayInjection> still;
    for (const auto& d : world_.pending_injections) {
        auto& s = world_.states.at(d.train_id);
        if (s.finished) continue;
        const std::size_t pos = s.last_report ? s.path_pos : 0;
        std::optional<std::size_t> from;
        if (d.at_node) {
            auto it = std::find(s.path.nodes.begin(), s.path.nodes.end(), *d.at_node);
            if (it == s.path.nodes.end()) continue;  // never reached
            const auto idx = static_cast<std::size_t>(it - s.path.nodes.begin());
            if (!s.last_report) {
                if (idx == 0) from = 0;
            } else if (idx < pos || (idx == pos && s.last_report->kind == PassKind::Depart)) {
                continue;  // passed before the delay could apply
            } else if (idx <= pos + 1) {
                from = idx;  // known once the train reaches the preceding node
            }
        } else if (d.at_time && *d.at_time <= world_.clock) {
            from = s.last_report ? pos + 1 : 0;
            if (s.last_report && s.last_report->kind == PassKind::Arrive && s.last_report->speed == 0.0) from = pos;
        }
        if (!from) {
            still.push_back(d);
            continue;
        }
        // First node at or after the requested one where the train can still come to a stand.
        for (std::size_t n = *from; n + 1 < s.path.nodes.size(); ++n) {
            const Id& node = s.path.nodes[n];
            s.holds[node] += d.amount;
            if (hold_fits(d.train_id)) break;
            s.holds[node] -= d.amount;
            if (s.holds[node] == 0) s.holds.erase(node);
        }
    }
    world_.pending_injections = std::move(still);
}

void Simulator::replan() {
    Snapshot snap;
    snap.taken_at = world_.clock;
    snap.area_id = "world";
    snap.horizon = kPlanHorizon;
    snap.area.id = "world";
    for (const auto& s : scenario_.network.sections()) snap.area.section_ids.push_back(s.id);
    for (const auto& run : world_.runs) {
        const auto& dyn = world_.states.at(run.train_id);
        if (dyn.finished) continue;
        auto st = snapshot_state(world_, scenario_.network, run.train_id);
        if (st.remaining_path.sections.empty()) continue;
        snap.train_states.push_back(std::move(st));
    }
    for (const auto& r : scenario_.network.restrictions()) {
        if (r.window.end > world_.clock) snap.active_restrictions.push_back(r);
    }
    for (const auto& o : world_.realized_orders) {
        if (snap.find_train(o.first) != nullptr && snap.find_train(o.second) != nullptr) snap.forced_orders.push_back(o);
    }

    std::vector<Trajectory> fallback;
    try {
        fallback = prognosis(snap, scenario_.network, config_);
    } catch (const Error&) {
        fallback.clear();
    }
    try {
        const Model model = build_model(snap, scenario_.network, config_, ModelOptions{1});
        HintSet hints;
        if (previous_) {
            hints = make_hints(*previous_, snap, scenario_.network);
        }
        SolveParams params;
        params.time_limit = 5.0;
        params.gap_target = 0.5;
        params.node_limit = 20000;
        params.stop_at_first_incumbent = true;
        Solution sol = solve(model, hints, params);
        if (sol.status == SolveStatus::OptimalWithinGap || sol.status == SolveStatus::GapNotReached) {
            plan_ = sol.trajectories;
            previous_ = std::make_shared<Solution>(std::move(sol));
            return;
        }
    } catch (const Error&) {
        // Fall through to the unimpeded prediction.
    }
    plan_ = std::move(fallback);
    previous_.reset();
}

std::vector<PositionReport> Simulator::step(Time dt) {
    if (dt <= 0) throw Error(ErrorCode::MalformedDocument, "step must be positive");
    const Time target = world_.clock + dt;
    std::vector<PositionReport> out;

    while (true) {
        // Earliest unreported passage event in the plan.
        std::optional<PendingEvent> next;
        for (const auto& t : plan_) {
            const auto& s = world_.states.at(t.train_id);
            if (s.finished) continue;
            // The planned trajectory covers a suffix of the full path.
            const std::size_t base = s.path.nodes.size() - t.path.nodes.size();
            for (std::size_t i = 0; i < t.passages.size(); ++i) {
                const auto& p = t.passages[i];
                const std::size_t idx = base + i;
                const bool last = idx + 1 == s.path.nodes.size();
                const bool stops = p.depart > p.arrive;
                std::optional<PendingEvent> ev;
                const bool arrive_done = s.last_report && (idx < s.path_pos || (idx == s.path_pos));
                const bool depart_done =
                    s.last_report && (idx < s.path_pos || (idx == s.path_pos && s.last_report->kind == PassKind::Depart));
                if (!arrive_done) {
                    ev = PendingEvent{p.arrive, t.train_id, idx, PassKind::Arrive, stops || last ? 0.0 : p.speed_in};
                } else if (!depart_done && stops && !last) {
                    ev = PendingEvent{p.depart, t.train_id, idx, PassKind::Depart, p.speed_out};
                } else if (!depart_done && !last && s.last_report->speed == 0.0) {
                    // Standing with no planned dwell left: leave now.
                    ev = PendingEvent{std::max(p.depart, s.last_report->time), t.train_id, idx, PassKind::Depart,
                                      p.speed_out};
                }
                if (!ev) continue;
                ev->time = std::max(ev->time, world_.clock);
                if (!next || ev->key() < next->key()) next = ev;
                break;  // events of one train come in path order
            }
        }
        // Timed injections falling inside the step act as events too.
        std::optional<Time> timed;
        for (const auto& d : world_.pending_injections) {
            if (d.at_time && *d.at_time > world_.clock && *d.at_time <= target) {
                timed = std::min(timed.value_or(*d.at_time), *d.at_time);
            }
        }
        if (timed && (!next || *timed < next->time)) {
            world_.clock = *timed;
            activate_injections();
            replan();
            continue;
        }
        if (!next || next->time > target) break;

        world_.clock = next->time;
        auto& s = world_.states.at(next->train);
        PositionReport r{next->train, s.path.nodes[next->node_index], next->time, next->speed, next->kind};
        s.last_report = r;
        s.path_pos = next->node_index;
        s.current_section =
            next->node_index > 0 ? std::optional<Id>(s.path.sections[next->node_index - 1]) : std::nullopt;
        if (next->node_index + 1 == s.path.nodes.size()) s.finished = true;
        history_.push_back(r);
        out.push_back(r);

        const std::size_t pending_before = world_.pending_injections.size();
        activate_injections();
        if (world_.pending_injections.size() != pending_before) replan();
    }
    world_.clock = target;
    update_kinematics();
    return out;
}

void Simulator::realize_order(const ForcedOrder& order) {
    world_.train(order.first);
    world_.train(order.second);
    if (scenario_.network.find_section(order.section) == nullptr) throw Error(ErrorCode::UnknownSection, order.section);
    if (std::find(world_.realized_orders.begin(), world_.realized_orders.end(), order) != world_.realized_orders.end()) {
        return;
    }
    world_.realized_orders.push_back(order);
    replan();
    update_kinematics();
}

void Simulator::set_route(const SetRoute& route) {
    auto& s = world_.states.at(world_.train(route.train_id).id);
    const auto detour = scenario_.network.resolve_route(route.route_id);
    if (!detour) throw Error(ErrorCode::DanglingReference, "unknown route " + route.route_id);
    Path updated = s.path;
    if (!splice_path(updated, *detour)) {
        throw Error(ErrorCode::NoFeasiblePath, "route " + route.route_id + " does not fit the path of " + route.train_id);
    }
    const std::size_t pos = s.last_report ? s.path_pos : 0;
    const bool keeps_past = updated.nodes.size() > pos &&
                            std::equal(s.path.nodes.begin(), s.path.nodes.begin() + static_cast<std::ptrdiff_t>(pos + 1),
                                       updated.nodes.begin());
    if (!keeps_past) throw Error(ErrorCode::NoFeasiblePath, "route " + route.route_id + " lies behind " + route.train_id);
    s.path = std::move(updated);
    SetRoute stamped = route;
    stamped.set_at = world_.clock;
    world_.set_routes.push_back(stamped);
    replan();
    update_kinematics();
}

void Simulator::inject(const DelayInjection& injection) {
    world_.train(injection.train_id);
    if (injection.amount <= 0 || (!injection.at_node && !injection.at_time)) {
        throw Error(ErrorCode::MalformedDocument, "injection needs a node or time and a positive amount");
    }
    world_.pending_injections.push_back(injection);
    const std::size_t before = world_.pending_injections.size();
    activate_injections();
    if (world_.pending_injections.size() != before) {
        replan();
        update_kinematics();
    }
}

void Simulator::update_kinematics() {
    for (auto& [id, s] : world_.states) {
        s.position_section.reset();
        s.position_offset = 0.0;
        s.speed = 0.0;
    }
    for (const auto& t : plan_) {
        auto& s = world_.states.at(t.train_id);
        if (s.finished) continue;
        const Time now = world_.clock;
        for (std::size_t i = 0; i + 1 < t.passages.size(); ++i) {
            const auto& a = t.passages[i];
            const auto& b = t.passages[i + 1];
            if (now < a.depart || now >= b.arrive) continue;
            const auto& sec = scenario_.network.section(t.path.sections[i]);
            const double span = static_cast<double>(std::max<Time>(b.arrive - a.depart, 1));
            s.position_section = sec.id;
            s.position_offset = sec.length * static_cast<double>(now - a.depart) / span;
            s.speed = sec.length / span;
            break;
        }
        s.delay = 0;
        for (const auto& v : t.stops) {
            if (v.scheduled.is_customer_stop) {
                s.delay = v.delay();
                break;
            }
        }
    }
}

}  // namespace ada
