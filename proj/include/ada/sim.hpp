#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ada/area.hpp"
#include "ada/optimizer.hpp"
#include "ada/infra.hpp"
#include "ada/traffic.hpp"
#include "ada/train.hpp"

namespace ada {

struct ScenarioPreset {
    std::string name;
    int journeys_per_day = 0;
    bool urban = false;
    bool local = false;
    bool long_distance = false;
    bool freight = false;
};

/// Corridor presets by daily journey count and traffic mix; journeys are divided by `desk_factor`.
const std::vector<ScenarioPreset>& table_presets();
std::vector<std::string> preset_names();

struct Scenario {
    std::string name;
    Network network;
    std::vector<Train> trains;
    std::vector<TrainRun> runs;
    std::vector<SetRoute> set_routes;
    std::vector<DelayInjection> injections;
    std::vector<ObservationArea> areas;
    /// Manual mesh boundary nodes; empty means the automatic rule.
    std::vector<Id> mesh_boundaries;
    std::uint64_t seed = 1;
    Time start_time = 0;
};

nlohmann::json to_json(const Scenario& s);

/// Parses a scenario document (infra + traffic + injections + areas in one object).
/// A document holding only {"preset": name} loads that preset.
Scenario scenario_from_json(const nlohmann::json& doc);

/// Throws UnknownPreset for names not in preset_names().
Scenario load_preset(const std::string& name, std::uint64_t seed = 1, int desk_factor = 20);

/// A preset name or a path to a scenario document.
Scenario load_scenario(const std::string& preset_or_path, std::uint64_t seed = 1);

WorldState initial_world(const Scenario& scenario);

/// Discrete-event world: trains follow a conflict-free plan that is rebuilt whenever
/// delays become known or decisions are realized.
class Simulator {
public:
    explicit Simulator(Scenario scenario, TimingConfig config = {});

    const WorldState& world() const { return world_; }
    const Network& network() const { return scenario_.network; }
    const Scenario& scenario() const { return scenario_; }

    /// Advances the clock by dt > 0 and returns the position reports emitted, in time order.
    std::vector<PositionReport> step(Time dt);

    /// Holds `second` until `first` has cleared `section`.
    void realize_order(const ForcedOrder& order);
    void set_route(const SetRoute& route);
    void inject(const DelayInjection& injection);

    /// Current world plan, one trajectory per unfinished train.
    const std::vector<Trajectory>& plan() const { return plan_; }

    /// Every report emitted so far.
    const std::vector<PositionReport>& history() const { return history_; }

private:
    void replan();
    void activate_injections();
    bool hold_fits(const Id& train_id) const;
    void update_kinematics();

    Scenario scenario_;
    TimingConfig config_;
    WorldState world_;
    std::vector<Trajectory> plan_;
    std::vector<PositionReport> history_;
    std::shared_ptr<const Solution> previous_;
};

}  // namespace ada
