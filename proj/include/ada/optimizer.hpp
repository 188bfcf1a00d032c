#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ada/conflicts.hpp"
#include "ada/infra.hpp"
#include "ada/timing.hpp"
#include "ada/traffic.hpp"

namespace ada {

/// A place two trains cannot use at the same time: a section, or a pair of mutually
/// excluded routes (id "routeA|routeB", sides 0 and 1).
struct OccupationSlot {
    Id resource;
    int side = -1;  // -1: any user conflicts with any other user
    std::size_t entry_boundary = 0;
    Time entry_offset = 0;
    std::optional<Time> fixed_entry;  // set for the part of a section a train already stands in
    std::size_t exit_boundary = 0;
    bool exit_is_arrival = false;
    Time exit_offset = 0;
    Time lag = 90;
    int rid = -1;  // index into Model::resources
};

/// One (path, plan) alternative for a train, with its unconstrained timing.
struct Mode {
    std::size_t path = 0;
    std::size_t plan = 0;
    timing::Schedule standalone;
    std::vector<OccupationSlot> slots;
};

struct ModelTrain {
    Id id;
    Train train;
    double weight = 1.0;
    timing::StartCondition start;
    std::vector<timing::PathTiming> paths;
    std::vector<Mode> modes;  // sorted: objective, exit time, path, plan rank
    std::optional<SectionOccupation> tail;
};

struct ModelForcedOrder {
    std::size_t first = 0;
    std::size_t second = 0;
    Id resource;
};

struct ModelRestriction {
    Id section;
    Interval window;
};

struct Disjunction {
    std::size_t a = 0;
    std::size_t b = 0;
    Id resource;
};

/// Event-graph optimisation model for one snapshot.
struct Model {
    Time taken_at = 0;
    Id area_id;
    TimingConfig config;
    std::vector<ModelTrain> trains;
    std::vector<ModelForcedOrder> forced;
    std::vector<ModelRestriction> restrictions;
    /// Train pairs that may share a resource under some alternative (forced pairs excluded).
    std::vector<Disjunction> disjunctions;
    std::vector<Id> resources;

    std::optional<std::size_t> train_index(const Id& id) const;
};

struct ModelOptions {
    std::size_t max_paths = 3;
};

/// Throws InfeasibleInput when a train has no route or profile alternative.
Model build_model(const Snapshot& snapshot, const Network& network, const TimingConfig& config = {},
                  const ModelOptions& options = {});

struct OrderDecision {
    Id first;
    Id second;
    Id resource;

    auto operator<=>(const OrderDecision&) const = default;
};

struct RestrictionDecision {
    Id train;
    std::size_t restriction = 0;
    bool before = true;

    auto operator<=>(const RestrictionDecision&) const = default;
};

/// Identifies a mode independently of plan numbering: route plus the signals
/// where the plan stops voluntarily.
struct ModeChoice {
    Id route_id;
    std::vector<Id> stop_nodes;
    bool reduced = false;
    int plan_rank = 0;
    std::vector<int> first_chain_levels;  // level indices (entry, peak, exit)

    bool operator==(const ModeChoice&) const = default;
};

/// Partial decisions; absent trains are undecided.
struct Decisions {
    std::map<Id, std::size_t> modes;  // index into ModelTrain::modes
    std::vector<OrderDecision> orders;
    std::vector<RestrictionDecision> restrictions;
};

/// Admissible bound for the completions of `decisions`. Throws CycleDetected when
/// the fixed decisions contradict each other.
double lower_bound(const Model& model, const Decisions& decisions);

enum class SolveStatus { OptimalWithinGap, GapNotReached, Infeasible, TimedOutNoIncumbent };
std::string to_string(SolveStatus status);

struct ProfileHint {
    std::optional<ModeChoice> choice;
    std::optional<std::vector<int>> first_chain_levels;  // level indices (entry, peak, exit)
};

struct Solution;

struct HintSet {
    std::vector<OrderDecision> fixed_orders;
    std::map<Id, ProfileHint> suggested_profiles;
    std::shared_ptr<const Solution> warm_incumbent;

    bool empty() const { return fixed_orders.empty() && suggested_profiles.empty() && !warm_incumbent; }
};

struct SolveParams {
    double time_limit = 60.0;  // seconds
    double gap_target = 0.10;
    std::optional<std::size_t> node_limit;
    std::uint64_t seed = 0;
    std::string trace_path;  // JSONL trace when non-empty
    /// Return the first conflict-free plan found (warm start or first dive).
    bool stop_at_first_incumbent = false;
};

struct Solution {
    Id area_id;
    Time taken_at = 0;
    std::vector<Trajectory> trajectories;  // planned, sorted by train id
    std::map<Id, ModeChoice> choices;
    std::vector<OrderDecision> orders;     // realized order of every shared resource
    double objective = 0.0;
    double lower_bound = 0.0;
    double gap = 0.0;
    SolveStatus status = SolveStatus::Infeasible;
    std::size_t nodes = 0;
    std::optional<std::size_t> first_incumbent_node;
    double elapsed_ms = 0.0;

    const Trajectory* trajectory(const Id& train) const;
};

nlohmann::json to_json(const Solution& s);

/// Best-first branch and bound over modes, orders and restriction sides.
Solution solve(const Model& model, const HintSet& hints = {}, const SolveParams& params = {});

/// Σ priority weight × lateness over customer stops of the planned trajectories.
double objective(const Solution& solution, const Snapshot& snapshot);

/// Carries over still-applicable orders and profiles of a previous solution.
HintSet make_hints(const Solution& previous, const Snapshot& snapshot, const Network& network,
                   Time position_threshold = 30);

/// Outcome of evaluating a complete decision set.
struct Evaluation {
    bool feasible = false;
    std::vector<Trajectory> trajectories;
    double objective = 0.0;
    /// Violated pairs or closures left unresolved by the decisions.
    std::size_t violations = 0;
};

/// Times the model under fixed modes and orders. Orders between trains that do not
/// both use the resource are ignored.
Evaluation evaluate_decisions(const Model& model, const Decisions& decisions);

/// Mode index of a train matching a choice made on an earlier snapshot.
std::optional<std::size_t> match_mode(const ModelTrain& train, const ModeChoice& choice);

ModeChoice describe_mode(const ModelTrain& train, std::size_t mode);

/// Situation features used by the profile predictor.
struct SituationFeatures {
    TrainCategory category = TrainCategory::Local;
    int delay_bucket = 0;     // minutes of entry delay
    int conflict_count = 0;   // prognosis conflicts involving the train
    Time headway_to_leader = 0;

    bool operator==(const SituationFeatures&) const = default;
};

struct ProfileRecord {
    SituationFeatures features;
    std::vector<int> first_chain_levels;  // level indices (entry, peak, exit)
};

struct PredictorConfig {
    std::size_t k = 5;
};

SituationFeatures situation_features(const Snapshot& snapshot, const Network& network, const Id& train);

/// k-nearest-neighbour majority vote over recorded situations; empty history gives nothing.
std::map<Id, std::vector<int>> predict_profiles(const Snapshot& snapshot, const Network& network,
                                                   const std::vector<ProfileRecord>& history,
                                                   const PredictorConfig& config = {});

/// Level indices (entry, peak, exit) of the chosen first-chain profile of each train.
std::vector<ProfileRecord> record_profiles(const Snapshot& snapshot, const Network& network, const Model& model,
                                           const Solution& solution);

}  // namespace ada
