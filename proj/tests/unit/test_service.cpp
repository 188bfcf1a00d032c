#include "common.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>

#include "httplib.h"

#include "ada/service.hpp"

using namespace ada;
using nlohmann::json;

namespace {

std::string temp_log(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("ada_service_" + name + ".jsonl");
    std::filesystem::remove(p);
    return p.string();
}

RunConfig fig7_config(const std::string& log = {}) {
    RunConfig c;
    c.scenario = "fig7";
    c.gap_target = 1e-9;
    c.event_log = log;
    return c;
}

HttpResponse get(Service& s, const std::string& path, std::map<std::string, std::string> query = {},
                 const std::string& etag = {}) {
    return s.handle({"GET", path, std::move(query), {}, etag});
}

HttpResponse post(Service& s, const std::string& path, const json& body) {
    return s.handle({"POST", path, {}, body.dump(), {}});
}

Id first_recommendation(Service& s, const Id& area = "X") {
    const auto r = get(s, "/areas/" + area + "/recommendations");
    REQUIRE(r.status == 200);
    const auto list = json::parse(r.body);
    REQUIRE(!list.empty());
    return list.front().at("id").get<Id>();
}

}  // namespace

TEST_CASE("options and config files") {
    RunConfig c;
    set_option(c, "time-limit", "2.5");
    set_option(c, "gap-target", "0.05");
    CHECK(c.time_limit == 2.5);
    CHECK(c.gap_target == 0.05);
    CHECK_ERROR_CODE(set_option(c, "bogus", "1"), ErrorCode::MalformedDocument);
    CHECK_ERROR_CODE(set_option(c, "cadence", "soon"), ErrorCode::MalformedDocument);

    const auto path = std::filesystem::temp_directory_path() / "ada_service.conf";
    std::ofstream(path) << "# comment\nscenario = fig5\nseed=4\n";
    const auto from_file = load_config(path.string());
    CHECK(from_file.scenario == "fig5");
    CHECK(from_file.seed == 4);
    std::ofstream(path) << R"({"scenario": "fig6", "cadence": 60})";
    const auto from_json = load_config(path.string());
    CHECK(from_json.scenario == "fig6");
    CHECK(from_json.cadence == 60);
}

TEST_CASE("fig6 lists both areas and recommends in A after the first cycle") {
    RunConfig c;
    c.scenario = "fig6";
    Service s(c);
    const auto before = json::parse(get(s, "/areas").body);
    REQUIRE(before.size() == 2);
    CHECK(before[0].at("id") == "A");
    CHECK(before[1].at("id") == "B");
    s.solve_cycle();
    CHECK(!json::parse(get(s, "/areas/A/recommendations").body).empty());
    const auto m = json::parse(get(s, "/metrics").body);
    CHECK(m.at("runs") == 2);
    CHECK(m.at("mesh_rounds_to_fixed_point").is_number());
}

TEST_CASE("areas and recommendations") {
    Service s(fig7_config());
    s.solve_cycle();
    const auto areas = json::parse(get(s, "/areas").body);
    REQUIRE(areas.size() == 1);
    CHECK(areas[0].at("id") == "X");
    CHECK(areas[0].at("status") == "OptimalWithinGap");

    const auto recs = get(s, "/areas/X/recommendations");
    CHECK(recs.status == 200);
    CHECK(!recs.etag.empty());
    const auto list = json::parse(recs.body);
    REQUIRE(list.size() == 1);
    CHECK(list[0].at("kind") == "OrderChange");
    CHECK(list[0].at("status") == "Pending");

    CHECK(get(s, "/areas/X/recommendations", {}, recs.etag).status == 304);
    CHECK(json::parse(get(s, "/areas/X/recommendations", {{"status", "Expired"}}).body).empty());
    CHECK(get(s, "/areas/Q/recommendations").status == 404);
    CHECK(get(s, "/nothing").status == 404);

    const auto td = json::parse(get(s, "/areas/X/timedistance").body);
    CHECK(td.at("trains").size() == 2);
    CHECK(!td.at("nodes").empty());
    const auto m = json::parse(get(s, "/metrics").body);
    CHECK(m.at("runs") == 1);
}

TEST_CASE("dispatcher then setter acceptance realizes the recommendation") {
    Service s(fig7_config());
    s.solve_cycle();
    const Id id = first_recommendation(s);
    auto r = post(s, "/recommendations/" + id + "/dispatcher", {{"action", "accept"}});
    CHECK(r.status == 200);
    CHECK(json::parse(r.body).at("status") == "ForwardedToSetter");
    CHECK(post(s, "/recommendations/" + id + "/dispatcher", {{"action", "accept"}}).status == 409);
    r = post(s, "/recommendations/" + id + "/setter", {{"action", "accept"}});
    CHECK(r.status == 200);
    CHECK(json::parse(r.body).at("status") == "RealizedBySetter");
    CHECK(!s.simulator().world().realized_orders.empty());
    CHECK(post(s, "/recommendations/rec-999/dispatcher", {{"action", "accept"}}).status == 404);
    CHECK(post(s, "/recommendations/" + id + "/dispatcher", {{"action", "maybe"}}).status == 400);
}

TEST_CASE("feedback once") {
    Service s(fig7_config());
    s.solve_cycle();
    const Id id = first_recommendation(s);
    CHECK(post(s, "/recommendations/" + id + "/feedback", {{"thumb", "up"}}).status == 204);
    CHECK(post(s, "/recommendations/" + id + "/feedback", {{"thumb", "down"}}).status == 409);
}

TEST_CASE("acting on an expired recommendation conflicts") {
    Service s(fig7_config());
    s.solve_cycle();
    const Id id = first_recommendation(s);
    const Time deadline = s.registry().get(id).deadline;
    CHECK(post(s, "/sim/control", {{"action", "step"}, {"dt", deadline + 1 - s.clock()}}).status == 204);
    CHECK(s.registry().get(id).status == RecommendationStatus::Expired);
    CHECK(post(s, "/recommendations/" + id + "/dispatcher", {{"action", "reject"}}).status == 409);
}

TEST_CASE("simulation control") {
    Service s(fig7_config());
    CHECK(post(s, "/sim/control", {{"action", "pause"}}).status == 204);
    CHECK(s.paused());
    CHECK(post(s, "/sim/control", {{"action", "resume"}}).status == 204);
    CHECK(!s.paused());
    CHECK(post(s, "/sim/control", {{"action", "step"}, {"dt", 0}}).status == 400);
    CHECK(post(s, "/sim/control", {{"action", "jump"}}).status == 400);
    CHECK(post(s, "/sim/control", {{"action", "step"}, {"dt", 45}}).status == 204);
    CHECK(s.clock() == 45);
}

TEST_CASE("recommendations survive a restart") {
    const auto log = temp_log("restart");
    std::vector<Recommendation> before;
    {
        Service s(fig7_config(log));
        s.solve_cycle();
        const Id id = first_recommendation(s);
        post(s, "/recommendations/" + id + "/dispatcher", {{"action", "accept"}});
        post(s, "/recommendations/" + id + "/feedback", {{"thumb", "down"}});
        before = s.registry().list();
    }
    Service again(fig7_config(log));
    CHECK(again.registry().list() == before);
}

TEST_CASE("concurrent acceptance has one winner") {
    Service s(fig7_config());
    s.solve_cycle();
    const Id id = first_recommendation(s);
    std::atomic<int> ok{0};
    std::atomic<int> conflict{0};
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i) {
        threads.emplace_back([&] {
            const auto r = post(s, "/recommendations/" + id + "/dispatcher", {{"action", "accept"}});
            (r.status == 200 ? ok : conflict)++;
        });
    }
    for (auto& t : threads) t.join();
    CHECK(ok == 1);
    CHECK(conflict == 7);
}

TEST_CASE("http round trip") {
    RunConfig c = fig7_config();
    c.bind = "127.0.0.1:18937";
    c.speed = 0.001;
    Service s(c);
    std::thread server([&] { s.serve(); });
    httplib::Client cli("127.0.0.1", 18937);
    httplib::Result res;
    for (int i = 0; i < 100 && !(res = cli.Get("/sim")); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->get_header_value("Access-Control-Allow-Origin") == "*");
    const auto recs = cli.Get("/areas/X/recommendations");
    REQUIRE(recs);
    CHECK(recs->status == 200);
    const auto etag = recs->get_header_value("ETag");
    CHECK(!etag.empty());
    const auto again = cli.Get("/areas/X/recommendations", {{"If-None-Match", etag}});
    REQUIRE(again);
    CHECK(again->status == 304);
    const auto bad = cli.Post("/recommendations/rec-404/dispatcher", R"({"action":"accept"})", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 404);
    s.stop();
    server.join();
}
