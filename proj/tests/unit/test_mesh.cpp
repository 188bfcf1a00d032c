#include "common.hpp"

#include <algorithm>
#include <set>

#include "ada/mesh.hpp"
#include "ada/sim.hpp"

using namespace ada;

namespace {

MeshConfig exact_config() {
    MeshConfig c;
    c.params.gap_target = 1e-9;
    c.params.time_limit = 10.0;
    return c;
}

const AreaOutcome& outcome(const RoundResult& r, const Id& area) {
    for (const auto& o : r.areas) {
        if (o.area_id == area) return o;
    }
    throw std::runtime_error("no outcome for " + area);
}

Time depart_at(const AreaOutcome& o, const Id& train, const Id& node) {
    REQUIRE(o.solution);
    const auto* t = o.solution->trajectory(train);
    REQUIRE(t != nullptr);
    const auto* p = t->passage(node);
    REQUIRE(p != nullptr);
    return p->depart;
}

}  // namespace

TEST_CASE("fig6 exchange publishes the swap and helps green") {
    const Simulator sim(load_scenario("fig6"));
    const auto& areas = sim.scenario().areas;
    const auto result = run_to_fixed_point(areas, sim.world(), sim.network(), exact_config());
    REQUIRE(result.converged);
    REQUIRE(result.fixed_point_round);
    CHECK(*result.fixed_point_round <= 10);

    const auto& last = result.rounds.back();
    std::vector<Id> into_b;
    for (const auto& h : last.handoffs) {
        if (h.from_area == "A" && h.to_area == "B") into_b.push_back(h.train_id);
    }
    CHECK(std::set<Id>(into_b.begin(), into_b.end()) == std::set<Id>{"blue", "red"});
    for (const auto& h : last.handoffs) {
        if (h.to_area == "B") CHECK(h.boundary_order_seq == std::vector<Id>{"blue", "red"});
    }

    // Timetable order at the boundary is red before blue.
    const auto& a_first = outcome(result.rounds.front(), "A");
    const auto prog = prognosis(a_first.snapshot, sim.network());
    const auto at_t = [&](const Id& id) {
        for (const auto& t : prog) {
            if (t.train_id == id) return t.passage("T")->arrive;
        }
        return Time{-1};
    };
    CHECK(at_t("red") < at_t("blue"));

    // Round 1 is every area solved alone.
    const auto& b_alone = outcome(result.rounds.front(), "B");
    const auto& b_mesh = outcome(last, "B");
    const Time unimpeded = [&] {
        for (const auto& t : prognosis(b_alone.snapshot, sim.network())) {
            if (t.train_id == "green") return t.passage("T")->arrive;
        }
        return Time{-1};
    }();
    REQUIRE(unimpeded >= 0);
    const Time delay_alone = depart_at(b_alone, "green", "T") - unimpeded;
    const Time delay_mesh = depart_at(b_mesh, "green", "T") - unimpeded;
    CHECK(delay_mesh < delay_alone);
}

TEST_CASE("a single area mesh equals a direct solve") {
    const Simulator sim(load_scenario("fig7"));
    const auto& area = sim.scenario().areas.front();
    const auto cfg = exact_config();
    const auto mesh = run_to_fixed_point({area}, sim.world(), sim.network(), cfg);
    REQUIRE(mesh.converged);
    const auto snap = build_snapshot(sim.world(), sim.network(), area, area.horizon);
    const auto direct = solve(build_model(snap, sim.network()), {}, cfg.params);
    const auto& o = outcome(mesh.rounds.back(), area.id);
    REQUIRE(o.solution);
    CHECK(o.solution->objective == doctest::Approx(direct.objective));
    REQUIRE(o.solution->trajectories.size() == direct.trajectories.size());
    for (std::size_t i = 0; i < direct.trajectories.size(); ++i) {
        CHECK(o.solution->trajectories[i].passages.back().arrive == direct.trajectories[i].passages.back().arrive);
    }
    CHECK(mesh.rounds.back().handoffs.empty());
}

TEST_CASE("automatic partition cuts at double-track transitions") {
    const auto scenario = load_scenario("fig5");
    const auto areas = section_network(scenario.network);
    std::set<Id> boundaries;
    std::set<Id> covered;
    for (const auto& a : areas) {
        boundaries.insert(a.boundary_nodes.begin(), a.boundary_nodes.end());
        for (const auto& s : a.section_ids) CHECK(covered.insert(s).second);
    }
    const auto transitions = double_track_transitions(scenario.network);
    CHECK(boundaries == std::set<Id>(transitions.begin(), transitions.end()));
    CHECK(covered.size() == scenario.network.sections().size());
    CHECK(areas.front().id == "A");
    for (const auto& a : areas) {
        for (const auto& [node, neighbours] : a.downstream_neighbors) {
            CHECK(a.has_boundary(node));
            for (const auto& n : neighbours) CHECK(n != a.id);
        }
    }
}

TEST_CASE("manual boundaries override the automatic cut") {
    const auto scenario = load_scenario("fig5");
    PartitionRules rules;
    rules.manual_boundaries = {"T2"};
    const auto areas = section_network(scenario.network, rules);
    CHECK(areas.size() == 2);
    for (const auto& a : areas) CHECK(a.boundary_nodes == std::vector<Id>{"T2"});
}

TEST_CASE("a network without cuts beyond the size limit is rejected") {
    const auto scenario = load_scenario("fig7");
    PartitionRules rules;
    rules.max_sections = 2;
    CHECK_ERROR_CODE(section_network(scenario.network, rules), ErrorCode::UnpartitionableNetwork);
}

TEST_CASE("no handoffs leave the snapshot unchanged") {
    const Simulator sim(load_scenario("fig6"));
    const auto& area = sim.scenario().areas.back();
    const auto snap = build_snapshot(sim.world(), sim.network(), area, area.horizon);
    const auto same = apply_handoffs(snap, {});
    CHECK(to_json(same.area) == to_json(snap.area));
    CHECK(same.train_states.size() == snap.train_states.size());
    for (std::size_t i = 0; i < snap.train_states.size(); ++i) {
        CHECK(same.train_states[i].earliest_start == snap.train_states[i].earliest_start);
        CHECK(same.train_states[i].holds == snap.train_states[i].holds);
    }
    CHECK(same.forced_orders == snap.forced_orders);
    CHECK(same.boundary_constraints.empty());
}

TEST_CASE("handoffs raise entry bounds and never lower them") {
    const Simulator sim(load_scenario("fig6"));
    const auto& b = sim.scenario().areas.back();
    REQUIRE(b.id == "B");
    const auto snap = build_snapshot(sim.world(), sim.network(), b, b.horizon);
    const auto red_start = [&](const Snapshot& s) {
        const auto m = build_model(s, sim.network());
        return m.trains.at(*m.train_index("red")).start.time;
    };
    const Time base = red_start(snap);
    BoundaryHandoff h{"red", "T", 2000, 30.0, {}, 1, "A", "B"};
    CHECK(red_start(apply_handoffs(snap, {h})) == std::max<Time>(base, 2000));
    h.earliest_entry = 0;
    CHECK(red_start(apply_handoffs(snap, {h})) == base);
}

TEST_CASE("boundary order becomes a forced order") {
    const Simulator sim(load_scenario("fig6"));
    const auto& b = sim.scenario().areas.back();
    const auto snap = build_snapshot(sim.world(), sim.network(), b, b.horizon);
    const BoundaryHandoff h{"red", "T", 700, 30.0, {"blue", "red"}, 1, "A", "B"};
    const auto out = apply_handoffs(snap, {h, h});
    REQUIRE(out.forced_orders.size() == 1);
    CHECK(out.forced_orders[0].first == "blue");
    CHECK(out.forced_orders[0].second == "red");
    CHECK(out.boundary_constraints.size() == 1);
}

TEST_CASE("handoff at a node that is not a boundary is rejected") {
    const Simulator sim(load_scenario("fig6"));
    const auto& b = sim.scenario().areas.back();
    const auto snap = build_snapshot(sim.world(), sim.network(), b, b.horizon);
    const BoundaryHandoff h{"red", "B_e", 100, 30.0, {}, 1, "A", "B"};
    CHECK_ERROR_CODE(apply_handoffs(snap, {h}), ErrorCode::UnknownBoundaryNode);
}

TEST_CASE("handoff comparison ignores the producing round") {
    BoundaryHandoff a{"red", "T", 100, 30.0, {"red"}, 1, "A", "B"};
    BoundaryHandoff b = a;
    b.produced_round = 2;
    CHECK(same_handoffs({a}, {b}));
    b.earliest_entry = 101;
    CHECK(!same_handoffs({a}, {b}));
    CHECK(handoff_from_json(to_json(a)) == a);
}
