#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ada/area.hpp"
#include "ada/optimizer.hpp"
#include "ada/traffic.hpp"

namespace ada {

struct PartitionRules {
    /// Cut exactly at these nodes instead of the double-track transitions.
    std::vector<Id> manual_boundaries;
    /// Largest area allowed when no cut candidate exists; 0 means unlimited.
    std::size_t max_sections = 0;
    Time horizon = 1200;
    double gap_target = 0.10;
};

/// Areas named A, B, ... in order of their smallest section id. Throws
/// UnpartitionableNetwork when no cut exists and the network exceeds max_sections.
std::vector<ObservationArea> section_network(const Network& network, const PartitionRules& rules = {});

/// Area containing `section`, if any.
const ObservationArea* area_of_section(const std::vector<ObservationArea>& areas, const Id& section);

/// One handoff per train leaving `area` across a boundary node into a neighbour,
/// in the train's own direction of travel.
std::vector<BoundaryHandoff> publish_handoffs(const Solution& solution, const ObservationArea& area,
                                              const std::vector<ObservationArea>& areas, const WorldState& world,
                                              int round);

/// Raises entry bounds and injects boundary orders for handoffs addressed to the
/// snapshot's area. Throws UnknownBoundaryNode for nodes that are not its boundaries.
Snapshot apply_handoffs(Snapshot snapshot, const std::vector<BoundaryHandoff>& handoffs);

struct AreaOutcome {
    Id area_id;
    Snapshot snapshot;
    std::optional<Solution> solution;
    std::string error;
};

/// Snapshot, incoming handoffs, model and solve for one area. Solver errors are
/// reported in the outcome. Prognosis orders are passed as tie-breaking hints.
AreaOutcome solve_area(const WorldState& world, const Network& network, const ObservationArea& area,
                       const std::vector<BoundaryHandoff>& incoming, const SolveParams& params,
                       const HintSet& hints = {}, const TimingConfig& config = {});

struct MeshConfig {
    int max_rounds = 10;
    SolveParams params;
    TimingConfig timing;
    bool parallel = true;
};

struct RoundResult {
    int round = 0;
    std::vector<AreaOutcome> areas;
    std::vector<BoundaryHandoff> handoffs;  // published this round, sorted
};

/// Solves every area with the handoffs published in the previous round.
RoundResult run_round(const std::vector<ObservationArea>& areas, const WorldState& world, const Network& network,
                      const std::vector<BoundaryHandoff>& previous, int round, const MeshConfig& config = {});

struct MeshResult {
    std::vector<RoundResult> rounds;
    bool converged = false;
    /// Round whose handoffs equal those of the round before it.
    std::optional<int> fixed_point_round;
};

/// Repeats rounds on a frozen world until two consecutive rounds publish the same
/// handoffs or max_rounds is reached.
MeshResult run_to_fixed_point(const std::vector<ObservationArea>& areas, const WorldState& world,
                              const Network& network, const MeshConfig& config = {});

/// Equal ignoring the producing round.
bool same_handoffs(const std::vector<BoundaryHandoff>& a, const std::vector<BoundaryHandoff>& b);

}  // namespace ada
