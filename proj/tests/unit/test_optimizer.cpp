#include "common.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "ada/conflicts.hpp"
#include "ada/sim.hpp"
#include "instances.hpp"
#include "oracles.hpp"

using namespace ada;
using nlohmann::json;

namespace {

const std::string kData = ADA_TEST_DATA;

SolveParams exact() {
    SolveParams p;
    p.gap_target = 1e-9;
    p.time_limit = 60;
    return p;
}

json section(const Id& id, const Id& from, const Id& to, double len, bool bidir) {
    return {{"id", id}, {"from_node", from}, {"to_node", to}, {"length", len}, {"speed_limit", 30.0}, {"bidirectional", bidir}};
}

json train(const Id& id, double weight) {
    return {{"id", id}, {"priority_weight", weight}, {"v_max", 30.0}, {"accel", 0.6}, {"decel", 0.6}, {"category", "Local"}};
}

json run(const Id& id, const Id& from, const Id& to, const Id& route, json stops = json::array()) {
    return {{"train_id", id},   {"entry_signal", from}, {"exit_signal", to}, {"scheduled_entry", 0},
            {"stops", stops}, {"scheduled_route_id", route}};
}

json base_doc(json nodes, json sections) {
    json ns = json::array();
    for (const auto& n : nodes) ns.push_back({{"id", n}, {"kind", "MainSignal"}});
    // One route per section so that every signal belongs to a route.
    json routes = json::array();
    for (const auto& s : sections) {
        routes.push_back({{"id", "r_" + s.at("id").get<std::string>()},
                          {"section_ids", json::array({s.at("id")})},
                          {"entry_signal", s.at("from_node")},
                          {"exit_signal", s.at("to_node")}});
        if (s.value("bidirectional", false)) {
            routes.push_back({{"id", "r_" + s.at("id").get<std::string>() + "_rev"},
                              {"section_ids", json::array({s.at("id")})},
                              {"entry_signal", s.at("to_node")},
                              {"exit_signal", s.at("from_node")}});
        }
    }
    return {{"nodes", ns}, {"sections", sections}, {"routes", routes}, {"stations", json::array()},
            {"trains", json::array()}, {"runs", json::array()}};
}

struct Built {
    Scenario scenario;
    Snapshot snapshot;
    Model model;
};

Built build(const json& doc, Time horizon = 3600) {
    Built b{scenario_from_json(doc), {}, {}};
    const auto world = initial_world(b.scenario);
    b.snapshot = build_snapshot(world, b.scenario.network, ada::testing::whole_area(b.scenario.network, horizon), horizon);
    b.model = build_model(b.snapshot, b.scenario.network);
    return b;
}

// Single track between two one-platform stations; one train each way, both due at once.
json crossing_doc(double w_east, double w_west) {
    auto doc = base_doc(json::array({"A0", "x", "y", "B0"}),
                        json::array({section("pa", "A0", "x", 400, true), section("s", "x", "y", 3000, true),
                                     section("pb", "y", "B0", 400, true)}));
    doc["stations"] = json::array({{{"id", "PA"}, {"name", "PA"}, {"platform_sections", json::array({"pa"})}},
                                   {{"id", "PB"}, {"name", "PB"}, {"platform_sections", json::array({"pb"})}}});
    doc["trains"] = json::array({train("east", w_east), train("west", w_west)});
    // Arrival due at the unimpeded time, so any wait is lateness.
    const Time due = 170;
    doc["runs"] = json::array(
        {run("east", "A0", "B0", "pa+s+pb", json::array({{{"station_id", "PB"}, {"arrival", due}, {"departure", due}, {"min_dwell", 0}}})),
         run("west", "B0", "A0", "pb+s+pa", json::array({{{"station_id", "PA"}, {"arrival", due}, {"departure", due}, {"min_dwell", 0}}}))});
    return doc;
}

std::vector<Conflict> track_conflicts(const Solution& s, const Network& net) {
    auto cs = detect_conflicts(s.trajectories, net);
    std::erase_if(cs, [](const Conflict& c) { return c.kind == ConflictKind::Schedule; });
    return cs;
}

Decisions decisions_of(const Model& m, const Solution& s) {
    Decisions d;
    for (const auto& t : m.trains) d.modes[t.id] = *match_mode(t, s.choices.at(t.id));
    d.orders = s.orders;
    return d;
}

}  // namespace

TEST_CASE("one train on one chain") {
    auto doc = base_doc(json::array({"a", "b"}), json::array({section("s", "a", "b", 2000, false)}));
    doc["trains"] = json::array({train("t", 1.0)});
    doc["runs"] = json::array({run("t", "a", "b", "s")});
    const auto b = build(doc);
    REQUIRE(b.model.trains.size() == 1);
    CHECK(b.model.disjunctions.empty());
    for (const auto& m : b.model.trains[0].modes) {
        const auto& pt = b.model.trains[0].paths[m.path];
        CHECK(pt.boundaries.size() == 2);
        CHECK(pt.plans[m.plan].run_time.size() == 1);
    }
}

TEST_CASE("two trains sharing one single-track section give one disjunction") {
    auto doc = base_doc(json::array({"a", "b"}), json::array({section("s", "a", "b", 2000, true)}));
    doc["trains"] = json::array({train("t1", 1.0), train("t2", 1.0)});
    doc["runs"] = json::array({run("t1", "a", "b", "s"), run("t2", "b", "a", "r_s_rev")});
    const auto b = build(doc);
    REQUIRE(b.model.disjunctions.size() == 1);
    CHECK(b.model.disjunctions[0].resource == "s");
}

TEST_CASE("fig6 area B disjunctions match a shared-section scan") {
    const Simulator sim(load_scenario("fig6"));
    const auto& sc = sim.scenario();
    const auto& area = *std::find_if(sc.areas.begin(), sc.areas.end(), [](const auto& a) { return a.id == "B"; });
    const auto snap = build_snapshot(sim.world(), sc.network, area, area.horizon);
    const auto model = build_model(snap, sc.network);
    std::set<std::tuple<Id, Id, Id>> want;
    for (std::size_t i = 0; i < model.trains.size(); ++i) {
        for (std::size_t j = i + 1; j < model.trains.size(); ++j) {
            for (const auto& pi : model.trains[i].paths) {
                for (const auto& pj : model.trains[j].paths) {
                    for (const auto& s : pi.path.sections) {
                        if (area.has_section(s) &&
                            std::find(pj.path.sections.begin(), pj.path.sections.end(), s) != pj.path.sections.end()) {
                            want.insert({model.trains[i].id, model.trains[j].id, s});
                        }
                    }
                }
            }
        }
    }
    std::set<std::tuple<Id, Id, Id>> got;
    for (const auto& d : model.disjunctions) got.insert({model.trains[d.a].id, model.trains[d.b].id, d.resource});
    CHECK(model.trains.size() == 3);
    CHECK(got == want);
}

TEST_CASE("weighted lateness") {
    Snapshot snap;
    TrainSnapshotState a;
    a.train = {"a", 2.0, 30, 0.5, 0.5, TrainCategory::Local};
    TrainSnapshotState b;
    b.train = {"b", 4.0, 30, 0.5, 0.5, TrainCategory::Local};
    snap.train_states = {a, b};
    auto late = [](const Id& id, Time by) {
        Trajectory t;
        t.train_id = id;
        StopVisit v;
        v.scheduled = {"X", 100, 130, 30, true};
        v.arrive = 100 + by;
        v.depart = 130 + by;
        t.stops.push_back(v);
        return t;
    };
    Solution s;
    CHECK(objective(s, snap) == 0.0);
    s.trajectories = {late("a", 180)};
    CHECK(objective(s, snap) == 360.0);
    snap.train_states[0].train.priority_weight = 1.0;
    s.trajectories = {late("a", 60), late("b", 30)};
    CHECK(objective(s, snap) == 180.0);
}

TEST_CASE("zero-conflict snapshot solves to its prognosis") {
    const Simulator sim(load_scenario(kData + "/single_train.json"));
    const auto& area = sim.scenario().areas.front();
    const auto snap = build_snapshot(sim.world(), sim.network(), area, area.horizon);
    const auto model = build_model(snap, sim.network());
    const auto sol = solve(model);
    CHECK(sol.status == SolveStatus::OptimalWithinGap);
    CHECK(sol.objective == 0.0);
    CHECK(sol.gap == 0.0);
    const auto prog = prognosis(snap, sim.network());
    REQUIRE(prog.size() == 1);
    REQUIRE(sol.trajectories.size() == 1);
    for (const auto& p : prog[0].passages) {
        const auto* q = sol.trajectories[0].passage(p.node);
        REQUIRE(q != nullptr);
        CHECK(q->arrive == p.arrive);
        CHECK(q->depart == p.depart);
    }
}

TEST_CASE("heavier train goes first on a single track") {
    for (const auto& [we, ww] : {std::pair{3.0, 1.0}, std::pair{1.0, 3.0}}) {
        const auto b = build(crossing_doc(we, ww));
        const auto sol = solve(b.model, {}, exact());
        REQUIRE(sol.status == SolveStatus::OptimalWithinGap);
        const Id heavy = we > ww ? "east" : "west";
        const Id light = we > ww ? "west" : "east";
        CHECK(std::find(sol.orders.begin(), sol.orders.end(), OrderDecision{heavy, light, "s"}) != sol.orders.end());
        // Both orientations evaluated directly; the trains share every section.
        Decisions d = decisions_of(b.model, sol);
        d.orders.clear();
        for (const char* sec : {"pa", "s", "pb"}) d.orders.push_back({heavy, light, sec});
        const double heavy_first = evaluate_decisions(b.model, d).objective;
        d.orders.clear();
        for (const char* sec : {"pa", "s", "pb"}) d.orders.push_back({light, heavy, sec});
        const double light_first = evaluate_decisions(b.model, d).objective;
        CHECK(heavy_first < light_first);
        CHECK(sol.objective == heavy_first);
        CHECK(track_conflicts(sol, b.scenario.network).empty());
    }
}

TEST_CASE("lower bounds") {
    std::mt19937_64 rng(21);
    for (int k = 0; k < 15; ++k) {
        const auto in = ada::testing::random_instance(rng);
        const auto sol = solve(in.model, {}, exact());
        const auto oracle = ada::testing::exhaustive_optimum(in.model);
        REQUIRE(oracle.feasible);
        CHECK(lower_bound(in.model, {}) <= oracle.objective + 1e-9);
        // Fully decided: bound is the objective.
        const auto full = decisions_of(in.model, sol);
        CHECK(lower_bound(in.model, full) == doctest::Approx(sol.objective));
        // Any subset of an optimal plan's decisions stays admissible.
        Decisions part;
        for (const auto& [id, m] : full.modes) {
            if (rng() % 2) part.modes[id] = m;
        }
        for (const auto& o : full.orders) {
            if (rng() % 2) part.orders.push_back(o);
        }
        CHECK(lower_bound(in.model, part) <= sol.objective + 1e-9);
    }
    SUBCASE("relaxation is exact without shared resources") {
        const Simulator sim(load_scenario(kData + "/single_train.json"));
        const auto& area = sim.scenario().areas.front();
        const auto model = build_model(build_snapshot(sim.world(), sim.network(), area, area.horizon), sim.network());
        CHECK(lower_bound(model, {}) == solve(model, {}, exact()).objective);
    }
}

TEST_CASE("contradicting decisions are a cycle") {
    const auto b = build(crossing_doc(1.0, 1.0));
    Decisions d;
    d.modes = {{"east", 0}, {"west", 0}};
    d.orders = {{"east", "west", "s"}, {"west", "east", "s"}};
    CHECK_ERROR_CODE(lower_bound(b.model, d), ErrorCode::CycleDetected);
}

TEST_CASE("exact solves match exhaustive enumeration and are conflict-free") {
    std::mt19937_64 rng(99);
    for (int k = 0; k < 30; ++k) {
        const auto in = ada::testing::random_instance(rng);
        const auto sol = solve(in.model, {}, exact());
        const auto oracle = ada::testing::exhaustive_optimum(in.model);
        REQUIRE(oracle.feasible);
        CHECK(sol.status == SolveStatus::OptimalWithinGap);
        CHECK(sol.objective == oracle.objective);
        CHECK(sol.lower_bound <= sol.objective);
        CHECK(track_conflicts(sol, in.scenario.network).empty());
        CHECK(objective(sol, in.snapshot) == doctest::Approx(sol.objective));
        for (const auto& t : sol.trajectories) {
            for (const auto& s : t.stops) {
                if (s.scheduled.is_customer_stop && !s.terminal) CHECK(s.depart >= s.scheduled.departure);
            }
        }
    }
}

TEST_CASE("default gap target keeps the incumbent within the gap") {
    std::mt19937_64 rng(4);
    for (int k = 0; k < 20; ++k) {
        const auto in = ada::testing::random_instance(rng);
        const auto sol = solve(in.model);
        const auto oracle = ada::testing::exhaustive_optimum(in.model);
        REQUIRE(sol.status == SolveStatus::OptimalWithinGap);
        CHECK(sol.lower_bound <= oracle.objective + 1e-9);
        CHECK((sol.objective - oracle.objective) / std::max(sol.objective, 1.0) <= 0.10 + 1e-9);
    }
}

TEST_CASE("solve parameters are validated") {
    const auto b = build(crossing_doc(1.0, 1.0));
    SolveParams p;
    p.gap_target = 0.0;
    CHECK_ERROR_CODE(solve(b.model, {}, p), ErrorCode::InfeasibleInput);
    p.gap_target = 0.1;
    p.time_limit = 0.0;
    CHECK_ERROR_CODE(solve(b.model, {}, p), ErrorCode::InfeasibleInput);
}

TEST_CASE("same input and node budget give the same solution") {
    std::mt19937_64 rng(8);
    const auto in = ada::testing::random_instance(rng);
    SolveParams p = exact();
    p.node_limit = 500;
    const auto a = solve(in.model, {}, p);
    const auto b = solve(in.model, {}, p);
    CHECK(to_json(a).dump().size() > 0);
    auto ja = to_json(a);
    auto jb = to_json(b);
    ja.erase("elapsed_ms");
    jb.erase("elapsed_ms");
    CHECK(ja == jb);
}

TEST_CASE("hints") {
    std::mt19937_64 rng(31);
    for (int k = 0; k < 10; ++k) {
        const auto in = ada::testing::random_instance(rng);
        const auto cold = solve(in.model, {}, exact());
        const auto hints = make_hints(cold, in.snapshot, in.scenario.network);
        SUBCASE("identical snapshot reproduces the previous plan") {
            CHECK(hints.fixed_orders.size() == cold.orders.size());
            CHECK(hints.suggested_profiles.size() == cold.choices.size());
            SolveParams first = exact();
            first.stop_at_first_incumbent = true;
            const auto warm = solve(in.model, hints, first);
            CHECK(warm.objective == cold.objective);
            CHECK(warm.orders == cold.orders);
            CHECK(warm.choices == cold.choices);
        }
        SUBCASE("warm start never needs more nodes") {
            const auto warm = solve(in.model, hints, exact());
            CHECK(warm.objective == cold.objective);
            CHECK(warm.nodes <= cold.nodes);
            REQUIRE(warm.first_incumbent_node);
            REQUIRE(cold.first_incumbent_node);
            CHECK(*warm.first_incumbent_node <= *cold.first_incumbent_node);
        }
        SUBCASE("trains that left are dropped") {
            auto snap = in.snapshot;
            const Id gone = snap.train_states.front().train.id;
            snap.train_states.erase(snap.train_states.begin());
            const auto h = make_hints(cold, snap, in.scenario.network);
            CHECK_FALSE(h.suggested_profiles.contains(gone));
            for (const auto& o : h.fixed_orders) {
                CHECK(o.first != gone);
                CHECK(o.second != gone);
            }
        }
    }
}

TEST_CASE("profile prediction") {
    std::mt19937_64 rng(17);
    const auto in = ada::testing::random_instance(rng);
    CHECK(predict_profiles(in.snapshot, in.scenario.network, {}).empty());
    const auto sol = solve(in.model, {}, exact());
    const auto history = record_profiles(in.snapshot, in.scenario.network, in.model, sol);
    REQUIRE(!history.empty());
    PredictorConfig one;
    one.k = 1;
    const auto got = predict_profiles(in.snapshot, in.scenario.network, {history.front()}, one);
    for (const auto& [id, levels] : got) CHECK(levels == history.front().first_chain_levels);
    CHECK(got.size() == in.model.trains.size());
}

TEST_CASE("adversarial profile suggestions do not change the optimum") {
    std::mt19937_64 rng(23);
    for (int k = 0; k < 15; ++k) {
        const auto in = ada::testing::random_instance(rng);
        HintSet h;
        for (const auto& t : in.model.trains) {
            // Most expensive standalone alternative.
            h.suggested_profiles[t.id].choice = describe_mode(t, t.modes.size() - 1);
        }
        const auto sol = solve(in.model, h, exact());
        CHECK(sol.objective == ada::testing::exhaustive_optimum(in.model).objective);
    }
}
