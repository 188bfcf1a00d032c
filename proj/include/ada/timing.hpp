#pragma once

#include <optional>
#include <vector>

#include "ada/infra.hpp"
#include "ada/traffic.hpp"
#include "ada/vprofile.hpp"

namespace ada::timing {

/// How the first event of a train's path is anchored.
struct StartCondition {
    enum class Kind {
        Free,      ///< not yet on the path; enters at or after `time`, can be held before it
        Passing,   ///< reported arriving at speed: first node fixed at `time`, no waiting
        Standing,  ///< reported arriving and stopped: may depart at or after `not_before`
        Departed,  ///< reported departing at `time`
    };
    Kind kind = Kind::Free;
    Time time = 0;
    Time not_before = 0;
    std::optional<double> speed;
};

/// Node on the path where a chain ends and a new one starts.
struct Boundary {
    std::size_t node_index = 0;
    Id node;
    bool must_stop = false;
    Time dwell = 0;
};

struct StopRef {
    ScheduledStop scheduled;
    std::size_t boundary = 0;
    bool terminal = false;
};

struct ChainSpec {
    SectionChain chain;
    std::size_t first_section = 0;  // index into path.sections
    std::size_t last_section = 0;
    std::vector<double> section_start;  // distance from chain start per section
    std::vector<double> section_end;
    SpeedLevelSet levels;
};

/// One velocity profile per chain, continuous at boundaries.
struct Plan {
    std::vector<VProfile> profiles;
    std::vector<Time> run_time;        // per chain
    std::vector<char> waitable;        // per boundary
    std::vector<Time> entry_offset;    // per section, from the chain's start departure
    std::vector<Time> exit_offset;     // per section; chain-final sections exit at the boundary departure
    bool reduced = false;
    int rank = 0;

    double boundary_speed(std::size_t b) const;
};

/// Everything needed to time one train over one path.
struct PathTiming {
    Path path;
    Id route_id;
    std::vector<Boundary> boundaries;
    std::vector<ChainSpec> chains;
    std::vector<std::size_t> section_chain;
    std::vector<StopRef> stops;
    std::vector<Plan> plans;

    /// Index of the boundary at `node_index`, if the node is a chain boundary.
    std::optional<std::size_t> boundary_at(std::size_t node_index) const;
    bool last_in_chain(std::size_t section) const;
};

struct TrainPathInput {
    const Train* train = nullptr;
    Path path;
    std::vector<ScheduledStop> stops;
    std::map<Id, Time> holds;
    std::optional<Id> current_section;
    StartCondition start;
    /// True when the path ends where the run ends (terminal stops use arrival).
    bool path_ends_run = true;
};

/// Throws InfeasibleInput when no continuous plan exists.
PathTiming build_path_timing(const Network& network, const TrainPathInput& input, const TimingConfig& config);

struct Schedule {
    bool feasible = false;
    std::vector<Time> arrive;  // per boundary
    std::vector<Time> depart;  // per boundary
    double objective = 0.0;
};

/// Earliest times for a single train. `depart_lb` holds optional extra lower
/// bounds on boundary departures (the last boundary's arrival for the final one).
Schedule evaluate(const PathTiming& pt, const Plan& plan, const StartCondition& start, double weight,
                  const std::vector<Time>* depart_lb = nullptr);

double objective_of(const PathTiming& pt, const std::vector<Time>& arrive, const std::vector<Time>& depart,
                    double weight);

/// Section entry/exit under a plan and boundary times.
Time section_entry(const PathTiming& pt, const Plan& plan, const std::vector<Time>& depart, std::size_t section);
Time section_exit(const PathTiming& pt, const Plan& plan, const std::vector<Time>& arrive,
                  const std::vector<Time>& depart, std::size_t section);

Trajectory make_trajectory(const Id& train_id, const PathTiming& pt, const Plan& plan,
                           const std::vector<Time>& arrive, const std::vector<Time>& depart);

/// Anchoring of a snapshot train at its last report (or run entry when unreported).
StartCondition start_condition(const TrainSnapshotState& state, Time taken_at);

/// Index of the best standalone plan: lowest objective, then earliest exit, then rank.
std::optional<std::size_t> best_plan(const PathTiming& pt, const StartCondition& start, double weight,
                                     const std::vector<Time>* depart_lb = nullptr);

}  // namespace ada::timing
