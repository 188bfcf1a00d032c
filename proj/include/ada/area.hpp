#pragma once

#include <map>
#include <set>
#include <vector>

#include "ada/error.hpp"
#include "json.hpp"

namespace ada {

/// Spatial and temporal scope of one optimisation instance.
struct ObservationArea {
    Id id;
    std::vector<Id> section_ids;
    std::vector<Id> boundary_nodes;
    Time horizon = 1200;
    double gap_target = 0.10;
    /// Boundary node -> neighbouring areas sharing it.
    std::map<Id, std::vector<Id>> downstream_neighbors;

    std::set<Id> section_set() const { return {section_ids.begin(), section_ids.end()}; }
    bool has_section(const Id& section) const;
    bool has_boundary(const Id& node) const;
};

/// Earliest incursion of a train into a neighbouring area, as planned upstream.
struct BoundaryHandoff {
    Id train_id;
    Id entry_node;
    Time earliest_entry = 0;
    double entry_speed = 0.0;
    std::vector<Id> boundary_order_seq;
    int produced_round = 0;
    Id from_area;
    Id to_area;

    bool operator==(const BoundaryHandoff&) const = default;
};

/// A realized or injected precedence: `first` passes `section` before `second`.
struct ForcedOrder {
    Id first;
    Id second;
    Id section;

    bool operator==(const ForcedOrder&) const = default;
    auto operator<=>(const ForcedOrder&) const = default;
};

nlohmann::json to_json(const ObservationArea& area);
ObservationArea area_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BoundaryHandoff& h);
BoundaryHandoff handoff_from_json(const nlohmann::json& j);

}  // namespace ada
