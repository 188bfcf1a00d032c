#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ada/conflicts.hpp"
#include "ada/dispatch.hpp"
#include "ada/mesh.hpp"
#include "ada/sim.hpp"

namespace httplib {
class Server;
}

namespace ada {

struct RunConfig {
    std::string scenario = "fig6";  // preset name or scenario file
    std::uint64_t seed = 1;
    std::string bind = "127.0.0.1:8080";
    Time cadence = 30;  // sim seconds between solve cycles
    double time_limit = 5.0;
    double gap_target = 0.10;
    int mesh_rounds = 10;
    std::string event_log;  // recommendation event log; empty keeps none
    double speed = 1.0;     // sim seconds per wall second while serving
};

/// Sets one option by name; throws MalformedDocument for unknown keys or bad values.
void set_option(RunConfig& config, const std::string& key, const std::string& value);

/// Reads a JSON object or key=value lines ('#' starts a comment).
RunConfig load_config(const std::string& path, RunConfig base = {});

/// Areas declared by the scenario, or the automatic partition when none are.
std::vector<ObservationArea> scenario_areas(const Scenario& scenario);

/// Latest solve cycle result for one area.
struct AreaView {
    Id id;
    Time solved_at = 0;
    std::optional<SolveStatus> status;
    double objective = 0.0;
    double gap = 0.0;
    std::size_t conflicts = 0;  // in the unimpeded prediction
    std::string error;
    std::vector<Trajectory> prognosis;
    std::vector<Trajectory> planned;
};

struct Metrics {
    std::size_t runs = 0;
    std::size_t runs_within_gap = 0;
    double objective_sum = 0.0;
    std::optional<int> mesh_rounds_to_fixed_point;

    double pct_within_gap() const { return runs == 0 ? 0.0 : static_cast<double>(runs_within_gap) / runs; }
    double mean_objective() const { return runs == 0 ? 0.0 : objective_sum / runs; }
};

nlohmann::json to_json(const Metrics& m);

struct HttpRequest {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
    std::string if_none_match;
};

struct HttpResponse {
    int status = 200;
    std::string body;
    std::string etag;
};

/// Simulator, area solvers and recommendation registry behind one API.
class Service {
public:
    /// Loads the scenario and recovers recommendations from an existing event log.
    explicit Service(RunConfig config);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Steps the simulation by dt, running a solve cycle at every cadence tick.
    void advance(Time dt);

    /// One mesh cycle on the current world: solve areas to a fixed point, derive
    /// recommendations and expire stale ones.
    void solve_cycle();

    HttpResponse handle(const HttpRequest& request);

    /// Blocks serving HTTP and advancing the clock in real time until stop().
    void serve();
    void stop();

    Time clock() const;
    bool paused() const { return paused_; }
    Metrics metrics() const;
    std::vector<AreaView> areas() const;
    const std::vector<ObservationArea>& area_defs() const { return areas_; }
    RecommendationRegistry& registry() { return registry_; }
    const Simulator& simulator() const { return sim_; }

private:
    HttpResponse dispatch_route(const HttpRequest& request);
    HttpResponse act(const Id& rec, const std::string& role, const nlohmann::json& body);
    void realize(const Recommendation& r);
    nlohmann::json time_distance(const Id& area, Time from, Time to) const;

    RunConfig config_;
    Simulator sim_;
    std::vector<ObservationArea> areas_;
    RecommendationRegistry registry_;

    mutable std::mutex mu_;     // sim, views, metrics
    std::mutex solve_mu_;       // one solve cycle at a time
    std::map<Id, AreaView> views_;
    Metrics metrics_;
    Time next_solve_ = 0;
    std::atomic<bool> paused_{false};
    std::atomic<bool> running_{false};
    std::atomic<httplib::Server*> server_{nullptr};  // set while serving
};

}  // namespace ada
