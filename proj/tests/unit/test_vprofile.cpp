#include "common.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ada/vprofile.hpp"
#include "oracles.hpp"

using namespace ada;
using ada::testing::closed_form_time;

namespace {

SectionChain chain(double length, double limit) { return {{"s"}, length, limit}; }

Train train(double v, double a, double d) { return {"t", 1.0, v, a, d, TrainCategory::Local}; }

}  // namespace

TEST_CASE("two levels on a long chain give the four entry/exit combinations") {
    const auto c = chain(5000.0, 40.0);
    const auto t = train(40.0, 0.5, 0.5);
    const auto ps = enumerate_vprofiles(c, t, {{0.0, 40.0}});
    REQUIRE(ps.size() == 4);
    std::vector<std::tuple<double, double, double>> got;
    for (const auto& p : ps) got.emplace_back(p.entry_speed, p.peak_speed, p.exit_speed);
    CHECK(got == std::vector<std::tuple<double, double, double>>{
                     {0.0, 40.0, 0.0}, {0.0, 40.0, 40.0}, {40.0, 40.0, 0.0}, {40.0, 40.0, 40.0}});
}

TEST_CASE("three levels on a long chain give thirteen profiles") {
    const auto ps = enumerate_vprofiles(chain(10000.0, 40.0), train(40.0, 0.5, 0.5), {{0.0, 20.0, 40.0}});
    // Brute force: entry <= peak, exit <= peak, peak > 0.
    std::size_t expected = 0;
    const double lv[] = {0.0, 20.0, 40.0};
    for (double e : lv) {
        for (double p : lv) {
            for (double x : lv) expected += p > 0.0 && e <= p && x <= p;
        }
    }
    CHECK(expected == 13);
    CHECK(ps.size() == expected);
}

TEST_CASE("short chain keeps only kinematically reachable peaks") {
    const auto t = train(40.0, 0.5, 0.5);
    const auto c = chain(1.0, 40.0);
    const auto ps = enumerate_vprofiles(c, t, {{0.0, 40.0}});
    for (const auto& p : ps) {
        const double need = (p.peak_speed * p.peak_speed - p.entry_speed * p.entry_speed) / (2 * t.accel) +
                            (p.peak_speed * p.peak_speed - p.exit_speed * p.exit_speed) / (2 * t.decel);
        CHECK(need <= c.length + 1e-9);
    }
    // Only the pure cruise fits.
    REQUIRE(ps.size() == 1);
    CHECK(ps[0].entry_speed == 40.0);
    CHECK(ps[0].exit_speed == 40.0);
}

TEST_CASE("accelerate then cruise") {
    const auto c = chain(1000.0, 20.0);
    const auto t = train(20.0, 0.5, 0.5);
    CHECK(running_time(make_vprofile(c, t, 0.0, 20.0, 20.0), c, t) == 70);
}

TEST_CASE("pure cruise takes ceil(L/v)") {
    const auto c = chain(1001.0, 30.0);
    const auto t = train(30.0, 0.5, 0.5);
    CHECK(running_time(make_vprofile(c, t, 30.0, 30.0, 30.0), c, t) == 34);
}

TEST_CASE("zero-length chain is rejected") {
    const auto t = train(30.0, 0.5, 0.5);
    CHECK_ERROR_CODE(make_vprofile(chain(0.0, 30.0), t, 30.0, 30.0, 30.0), ErrorCode::InfeasibleProfile);
    VProfile p;
    p.entry_speed = p.peak_speed = p.exit_speed = 30.0;
    CHECK_ERROR_CODE(running_time(p, chain(0.0, 30.0), t), ErrorCode::InfeasibleProfile);
}

TEST_CASE("minimum running time") {
    const auto t = train(40.0, 0.6, 0.6);
    const auto c = chain(4000.0, 40.0);
    SUBCASE("single level is full cruise") {
        CHECK(min_running_time(c, t, {{0.0, 40.0}}) == running_time(make_vprofile(c, t, 40.0, 40.0, 40.0), c, t));
    }
    SUBCASE("matches the enumerated minimum and never grows with more levels") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> len(50.0, 6000.0);
        std::uniform_real_distribution<double> frac(0.1, 0.95);
        for (int i = 0; i < 200; ++i) {
            const auto ci = chain(len(rng), 40.0);
            const auto levels = make_level_set(ci, t);
            Time brute = std::numeric_limits<Time>::max();
            for (const auto& p : enumerate_vprofiles(ci, t, levels)) brute = std::min(brute, running_time(p, ci, t));
            CHECK(min_running_time(ci, t, levels) == brute);
            auto more = levels;
            const double extra = frac(rng) * 40.0;
            more.levels.insert(std::upper_bound(more.levels.begin(), more.levels.end(), extra), extra);
            CHECK(min_running_time(ci, t, more) <= brute);
        }
    }
}

TEST_CASE("running times match the closed form and a stop-capable profile always exists") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> len(20.0, 8000.0);
    std::uniform_real_distribution<double> vmax(10.0, 70.0);
    std::uniform_real_distribution<double> acc(0.2, 1.2);
    std::uniform_real_distribution<double> limit(10.0, 70.0);
    int checked = 0;
    while (checked < 1000) {
        const auto c = chain(len(rng), limit(rng));
        const auto t = train(vmax(rng), acc(rng), acc(rng));
        const auto levels = make_level_set(c, t);
        const auto ps = enumerate_vprofiles(c, t, levels);
        CHECK(std::any_of(ps.begin(), ps.end(), [](const VProfile& p) { return p.stop_capable(); }));
        const auto& p = ps[rng() % ps.size()];
        const double exact = closed_form_time(c.length, p.entry_speed, p.peak_speed, p.exit_speed, t.accel, t.decel);
        const Time rt = running_time(p, c, t);
        CHECK(static_cast<double>(rt) >= exact - 1e-6);
        CHECK(static_cast<double>(rt) < exact + 1.0);
        ++checked;
    }
}

TEST_CASE("time and speed along a profile") {
    const auto c = chain(1000.0, 20.0);
    const auto t = train(20.0, 0.5, 0.5);
    const auto p = make_vprofile(c, t, 0.0, 20.0, 0.0);
    CHECK(p.length() == doctest::Approx(1000.0));
    CHECK(p.time_at(0.0, t) == doctest::Approx(0.0));
    CHECK(p.time_at(400.0, t) == doctest::Approx(40.0));
    CHECK(p.time_at(1000.0, t) == doctest::Approx(closed_form_time(1000.0, 0.0, 20.0, 0.0, 0.5, 0.5)));
    CHECK(p.speed_at(500.0, t) == doctest::Approx(20.0));
    CHECK(p.speed_at(1000.0, t) == doctest::Approx(0.0));
}
