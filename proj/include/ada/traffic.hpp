#pragma once

#include <map>
#include <optional>
#include <vector>

#include "ada/area.hpp"
#include "ada/infra.hpp"
#include "ada/train.hpp"

namespace ada {

/// Scheduled delay applied to a train, either when it reaches a node or at a time.
struct DelayInjection {
    Id train_id;
    std::optional<Id> at_node;
    std::optional<Time> at_time;
    Time amount = 0;
};

struct TrainDynamicState {
    std::optional<PositionReport> last_report;
    /// Section ending at the last reported node, if any.
    std::optional<Id> current_section;
    /// Planned path from run entry to run exit (set and realized routes spliced in).
    Path path;
    /// Index into path.nodes of the last reported node.
    std::size_t path_pos = 0;
    /// Known extra standing time per node.
    std::map<Id, Time> holds;
    bool finished = false;

    // Kinematic view maintained by the simulator.
    std::optional<Id> position_section;
    double position_offset = 0.0;
    double speed = 0.0;
    Time delay = 0;
};

/// Live operating situation. Single writer (the simulator).
struct WorldState {
    Time clock = 0;
    std::vector<Train> trains;
    std::vector<TrainRun> runs;
    std::map<Id, TrainDynamicState> states;
    std::vector<SetRoute> set_routes;
    std::vector<ForcedOrder> realized_orders;
    std::vector<DelayInjection> pending_injections;

    const Train& train(const Id& id) const;
    const TrainRun& run(const Id& train_id) const;
};

/// Timing parameters shared by prognosis, the optimisation model and conflict checks.
struct TimingConfig {
    std::vector<double> speed_fractions{0.6, 1.0};
    std::size_t max_plans_per_path = 64;
    Time headway = 60;
    Time release_margin = 30;
};

struct TrainSnapshotState {
    Train train;
    TrainRun run;
    std::optional<PositionReport> last_report;
    std::optional<Id> current_section;
    std::vector<SetRoute> set_routes;
    /// Remaining run, starting at the last reported node (or the run entry).
    Path remaining_path;
    std::vector<ScheduledStop> remaining_stops;
    /// Earliest entry for trains without a position report.
    Time earliest_start = 0;
    std::map<Id, Time> holds;
};

/// Frozen operating situation for one area and horizon.
struct Snapshot {
    Time taken_at = 0;
    Id area_id;
    Time horizon = 0;
    ObservationArea area;
    std::vector<TrainSnapshotState> train_states;
    std::vector<AvailabilityRestriction> active_restrictions;
    std::vector<BoundaryHandoff> boundary_constraints;
    std::vector<ForcedOrder> forced_orders;

    const TrainSnapshotState* find_train(const Id& id) const;
};

struct NodePassage {
    Id node;
    Time arrive = 0;
    Time depart = 0;
    double speed_in = 0.0;
    double speed_out = 0.0;
};

struct SectionOccupation {
    Id section;
    Time entry = 0;
    Time exit = 0;
};

struct StopVisit {
    ScheduledStop scheduled;
    Id node;
    Time arrive = 0;
    Time depart = 0;
    bool terminal = false;

    /// Delay entering the objective: arrival for terminating runs, departure otherwise.
    Time delay() const;
};

struct Trajectory {
    Id train_id;
    Path path;
    std::vector<NodePassage> passages;
    std::vector<SectionOccupation> occupations;
    std::vector<StopVisit> stops;

    const NodePassage* passage(const Id& node) const;
    const SectionOccupation* occupation(const Id& section) const;
};

/// Trains whose predicted presence intersects the area within [clock, clock + horizon].
Snapshot build_snapshot(const WorldState& world, const Network& network, const ObservationArea& area, Time horizon,
                        const TimingConfig& config = {});

/// Unimpeded forward prediction per train (sorted by train id). Realized orders in
/// the snapshot are honoured; other inter-train interactions are ignored.
std::vector<Trajectory> prognosis(const Snapshot& snapshot, const Network& network,
                                  const TimingConfig& config = {});

/// Snapshot state of one world train, ignoring area filtering.
TrainSnapshotState snapshot_state(const WorldState& world, const Network& network, const Id& train_id);

/// Full path for a run: scheduled route with set routes spliced in.
Path planned_path(const Network& network, const TrainRun& run, const std::vector<SetRoute>& set_routes);

/// Replaces the stretch of `base` between the endpoints of `detour` by `detour`.
/// Returns false when `base` does not visit both endpoints in order.
bool splice_path(Path& base, const Path& detour);

}  // namespace ada
