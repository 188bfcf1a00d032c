#include "common.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "ada/dispatch.hpp"
#include "ada/sim.hpp"

using namespace ada;
using S = RecommendationStatus;
using A = RecommendationAction;

namespace {

std::string temp_log(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("ada_test_" + name + ".jsonl");
    std::filesystem::remove(p);
    return p.string();
}

Recommendation candidate(const Id& train, Time deadline) {
    Recommendation r;
    r.area_id = "X";
    r.kind = RecommendationKind::OrderChange;
    r.train_ids = {train, "other"};
    r.location = "X";
    r.deadline = deadline;
    return r;
}

struct Fig7 {
    Simulator sim{load_scenario("fig7")};
    ObservationArea area = sim.scenario().areas.front();
    Snapshot snap;
    Model model;
    Solution sol;

    Fig7() { resolve(); }
    void resolve() {
        snap = build_snapshot(sim.world(), sim.network(), area, area.horizon);
        model = build_model(snap, sim.network());
        sol = solve(model);
    }
};

}  // namespace

TEST_CASE("state machine") {
    Recommendation r = candidate("a", 100);
    r.id = "rec-1";
    SUBCASE("dispatcher acceptance forwards to the setter") {
        CHECK(transition(r, A::DispatcherAccept, 10).status == S::ForwardedToSetter);
    }
    SUBCASE("setter decides after forwarding") {
        const auto f = transition(r, A::DispatcherAccept, 10);
        CHECK(transition(f, A::SetterAccept, 20).status == S::RealizedBySetter);
        CHECK(transition(f, A::SetterReject, 20).status == S::RejectedBySetter);
        CHECK_ERROR_CODE(transition(f, A::DispatcherAccept, 20), ErrorCode::InvalidTransition);
    }
    SUBCASE("setter cannot act on a pending recommendation") {
        CHECK_ERROR_CODE(transition(r, A::SetterAccept, 10), ErrorCode::InvalidTransition);
    }
    SUBCASE("terminal states refuse every action") {
        for (auto st : {S::RealizedBySetter, S::RejectedByDispatcher, S::RejectedBySetter, S::Expired}) {
            r.status = st;
            for (auto a : {A::DispatcherAccept, A::DispatcherReject, A::SetterAccept, A::SetterReject}) {
                CHECK_ERROR_CODE(transition(r, a, 10), ErrorCode::InvalidTransition);
            }
        }
    }
    SUBCASE("nothing after the deadline") {
        CHECK_ERROR_CODE(transition(r, A::DispatcherAccept, 101), ErrorCode::InvalidTransition);
    }
}

TEST_CASE("registry expiry, feedback and lookups") {
    RecommendationRegistry reg;
    const auto made = reg.add({candidate("a", 100)}, 0);
    REQUIRE(made.size() == 1);
    const Id id = made[0].id;
    CHECK(reg.get(id).status == S::Pending);
    CHECK(reg.expire(100).empty());
    CHECK(reg.expire(101).size() == 1);
    CHECK(reg.get(id).status == S::Expired);
    CHECK_ERROR_CODE(reg.apply(id, A::DispatcherReject, 102), ErrorCode::InvalidTransition);
    CHECK(reg.record_feedback(id, Thumb::Up, 103).feedback == Thumb::Up);
    CHECK_ERROR_CODE(reg.record_feedback(id, Thumb::Down, 104), ErrorCode::FeedbackAlreadySet);
    CHECK_ERROR_CODE(reg.get("rec-999"), ErrorCode::UnknownRecommendation);
}

TEST_CASE("acting after the deadline expires the recommendation") {
    RecommendationRegistry reg;
    const Id id = reg.add({candidate("a", 100)}, 0).at(0).id;
    CHECK_ERROR_CODE(reg.apply(id, A::DispatcherAccept, 101), ErrorCode::InvalidTransition);
    CHECK(reg.get(id).status == S::Expired);
}

TEST_CASE("duplicates of open recommendations are dropped") {
    RecommendationRegistry reg;
    CHECK(reg.add({candidate("a", 100)}, 0).size() == 1);
    CHECK(reg.add({candidate("a", 100)}, 10).empty());
    CHECK(reg.add({candidate("b", 100)}, 10).size() == 1);
    CHECK(reg.add({candidate("c", 5)}, 10).empty());  // already past its deadline
    const Id first = reg.list().front().id;
    reg.apply(first, A::DispatcherReject, 20);
    CHECK(reg.add({candidate("a", 100)}, 30).size() == 1);
}

TEST_CASE("fuzzed action sequences stay in declared states and replay identically") {
    const auto path = temp_log("fuzz");
    std::mt19937_64 rng(2024);
    {
        RecommendationRegistry reg(path);
        Time now = 0;
        const std::vector<S> declared{S::Pending,          S::AcceptedByDispatcher, S::ForwardedToSetter,
                                      S::RealizedBySetter, S::RejectedByDispatcher, S::RejectedBySetter,
                                      S::Expired};
        for (int step = 0; step < 2000; ++step) {
            now += static_cast<Time>(rng() % 20);
            const auto recs = reg.list();
            switch (rng() % 5) {
                case 0: reg.add({candidate("t" + std::to_string(rng() % 6), now + 10 + static_cast<Time>(rng() % 200))}, now); break;
                case 1: reg.expire(now); break;
                case 2:
                    if (!recs.empty()) {
                        try {
                            reg.record_feedback(recs[rng() % recs.size()].id, rng() % 2 ? Thumb::Up : Thumb::Down, now);
                        } catch (const Error& e) {
                            CHECK(e.code() == ErrorCode::FeedbackAlreadySet);
                        }
                    }
                    break;
                default:
                    if (!recs.empty()) {
                        const auto& r = recs[rng() % recs.size()];
                        const auto a = static_cast<A>(rng() % 4);
                        try {
                            const auto next = reg.apply(r.id, a, now);
                            CHECK(next.status != r.status);
                        } catch (const Error& e) {
                            CHECK(e.code() == ErrorCode::InvalidTransition);
                        }
                    }
            }
            for (const auto& r : reg.list()) CHECK(std::find(declared.begin(), declared.end(), r.status) != declared.end());
        }
        const auto again = RecommendationRegistry::replay(path);
        CHECK(again.list() == reg.list());
        CHECK(again.version() == reg.version());
    }
    // Exactly one feedback record per recommendation.
    std::map<Id, int> feedback;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line);
        if (j.at("event") == "feedback") ++feedback[j.at("rec_id").get<Id>()];
    }
    CHECK(!feedback.empty());
    for (const auto& [id, n] : feedback) CHECK_MESSAGE(n == 1, id);
}

TEST_CASE("replay of an unknown event is malformed") {
    const auto path = temp_log("bad");
    std::ofstream(path) << R"({"ts":0,"rec_id":"rec-1","event":"created","payload":{}})" << "\n";
    CHECK_THROWS(RecommendationRegistry::replay(path));
}

TEST_CASE("recommendation json round trip") {
    Recommendation r = candidate("a", 100);
    r.id = "rec-7";
    r.feedback = Thumb::Down;
    r.orders = {{"a", "other", "s"}};
    r.route = SetRoute{"a", "r1", 0};
    CHECK(recommendation_from_json(to_json(r)) == r);
}

TEST_CASE("tracing an unchanged world keeps the solution times") {
    Fig7 f;
    const auto traced = trace(f.sol, f.sim.world(), f.sim.network(), f.area);
    REQUIRE(traced.feasible);
    REQUIRE(traced.trajectories.size() == f.sol.trajectories.size());
    for (std::size_t i = 0; i < traced.trajectories.size(); ++i) {
        CHECK(traced.trajectories[i].passages.size() == f.sol.trajectories[i].passages.size());
        for (std::size_t k = 0; k < traced.trajectories[i].passages.size(); ++k) {
            CHECK(traced.trajectories[i].passages[k].arrive == f.sol.trajectories[i].passages[k].arrive);
            CHECK(traced.trajectories[i].passages[k].depart == f.sol.trajectories[i].passages[k].depart);
        }
    }
    CHECK(traced.unrealizable.empty());
}

TEST_CASE("extra delay shifts traced events by at most that much") {
    Fig7 f;
    Simulator later = f.sim;
    later.inject({"1234", std::nullopt, later.world().clock, 60});
    const auto base = trace(f.sol, f.sim.world(), f.sim.network(), f.area);
    const auto traced = trace(f.sol, later.world(), later.network(), f.area);
    REQUIRE(traced.feasible);
    CHECK(traced.orders == base.orders);
    for (std::size_t i = 0; i < traced.trajectories.size(); ++i) {
        const auto& a = base.trajectories[i];
        const auto& b = traced.trajectories[i];
        for (const auto& p : a.passages) {
            const auto* q = b.passage(p.node);
            if (q == nullptr) continue;
            CHECK(q->depart - p.depart >= 0);
            CHECK(q->depart - p.depart <= 60);
        }
    }
}

TEST_CASE("orders whose decision point was passed are unrealizable") {
    Fig7 f;
    std::optional<OrderDecision> order;
    for (const auto& o : f.sol.orders) {
        if (o.resource.find('|') == Id::npos) order = o;
    }
    REQUIRE(order);
    // The world runs the opposite way round.
    Simulator later = f.sim;
    later.realize_order({order->second, order->first, order->resource});
    auto cleared = [&](const Id& train) {
        const auto& st = later.world().states.at(train);
        const auto& secs = st.path.sections;
        const auto it = std::find(secs.begin(), secs.end(), order->resource);
        return st.last_report && it != secs.end() && static_cast<std::size_t>(it - secs.begin()) + 1 <= st.path_pos;
    };
    for (int i = 0; i < 400 && !cleared(order->second); ++i) later.step(5);
    REQUIRE(cleared(order->second));
    REQUIRE(!cleared(order->first));
    const auto traced = trace(f.sol, later.world(), later.network(), f.area);
    CHECK(std::find(traced.unrealizable.begin(), traced.unrealizable.end(), *order) != traced.unrealizable.end());
    CHECK(std::find(traced.orders.begin(), traced.orders.end(), *order) == traced.orders.end());
}

TEST_CASE("fig7 yields a single overtake at X") {
    Fig7 f;
    const auto traced = trace(f.sol, f.sim.world(), f.sim.network(), f.area);
    const auto baseline = make_baseline(f.snap, f.sim.network());
    const auto recs = derive_recommendations(traced, baseline, f.sim.network(), f.sim.world().clock);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].kind == RecommendationKind::OrderChange);
    auto ids = recs[0].train_ids;
    std::sort(ids.begin(), ids.end());
    CHECK(ids == std::vector<Id>{"1234", "567"});
    CHECK(recs[0].location == "X");
    CHECK(recs[0].deadline > f.sim.world().clock);
    CHECK(!recs[0].orders.empty());
}

TEST_CASE("identical plan and baseline give no recommendations") {
    Simulator sim(load_scenario(std::string(ADA_TEST_DATA) + "/single_train.json"));
    const auto& area = sim.scenario().areas.front();
    const auto snap = build_snapshot(sim.world(), sim.network(), area, area.horizon);
    const auto sol = solve(build_model(snap, sim.network()));
    const auto traced = trace(sol, sim.world(), sim.network(), area);
    CHECK(derive_recommendations(traced, make_baseline(snap, sim.network()), sim.network(), 0).empty());
}

TEST_CASE("a different platform track is a track change") {
    Simulator sim(load_scenario(std::string(ADA_TEST_DATA) + "/single_train.json"));
    const auto& area = sim.scenario().areas.front();
    const auto snap = build_snapshot(sim.world(), sim.network(), area, area.horizon);
    const auto model = build_model(snap, sim.network());
    const auto& tr = model.trains.front();
    const Id scheduled = snap.train_states.front().run.scheduled_route_id;
    std::optional<std::size_t> other;
    for (std::size_t k = 0; k < tr.modes.size() && !other; ++k) {
        if (tr.paths[tr.modes[k].path].route_id != scheduled) other = k;
    }
    REQUIRE(other);
    Decisions d;
    d.modes[tr.id] = *other;
    const auto ev = evaluate_decisions(model, d);
    Solution sol;
    sol.area_id = area.id;
    sol.trajectories = ev.trajectories;
    sol.choices[tr.id] = describe_mode(tr, *other);
    sol.status = SolveStatus::OptimalWithinGap;
    const auto traced = trace(sol, sim.world(), sim.network(), area);
    const auto recs = derive_recommendations(traced, make_baseline(snap, sim.network()), sim.network(), 0);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].kind == RecommendationKind::TrackChange);
    CHECK(recs[0].detail.find("m_X_1") != std::string::npos);
    CHECK(recs[0].detail.find("m_X_2") != std::string::npos);
    REQUIRE(recs[0].route);
    CHECK(recs[0].route->train_id == "1234");
}
