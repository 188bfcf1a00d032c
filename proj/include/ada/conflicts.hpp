#pragma once

#include <vector>

#include "ada/infra.hpp"
#include "ada/traffic.hpp"

namespace ada {

enum class ConflictKind { TrackOccupancy, Schedule, ClosedTrack };

std::string to_string(ConflictKind kind);

struct Conflict {
    ConflictKind kind = ConflictKind::TrackOccupancy;
    std::vector<Id> train_ids;  // sorted; two for TrackOccupancy, one otherwise
    Id location;                // section id, or station id for Schedule
    Interval window;
    Time severity = 0;          // overlap or lateness in seconds

    bool operator==(const Conflict&) const = default;
};

nlohmann::json to_json(const Conflict& c);

struct ConflictConfig {
    Time schedule_threshold = 90;
    Time release_margin = 30;
};

/// Occupancy, lateness and closure conflicts among the given trajectories, ordered
/// by window start, then kind, then train ids and location. `extra_restrictions`
/// are checked alongside the network's own.
std::vector<Conflict> detect_conflicts(const std::vector<Trajectory>& trajectories, const Network& network,
                                       const ConflictConfig& config = {},
                                       const std::vector<AvailabilityRestriction>& extra_restrictions = {});

}  // namespace ada
