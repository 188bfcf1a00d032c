#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ada/error.hpp"
#include "json.hpp"

namespace ada {

enum class NodeKind { MainSignal, StationPoint, Junction, Boundary };

struct Node {
    Id id;
    NodeKind kind = NodeKind::Junction;
    std::optional<Id> station;
};

struct TrackSection {
    Id id;
    Id from_node;
    Id to_node;
    double length = 0.0;       // meters
    double speed_limit = 0.0;  // m/s
    bool bidirectional = false;
    std::optional<Time> headway;  // overrides the default headway lag
};

/// Signal-to-signal chain of sections as set by the interlocking.
struct Route {
    Id id;
    std::vector<Id> section_ids;
    Id entry_signal;
    Id exit_signal;

    bool operator==(const Route&) const = default;
};

struct RouteExclusion {
    Id route_a;
    Id route_b;
};

/// Half-open time interval [start, end).
struct Interval {
    Time start = 0;
    Time end = 0;

    bool overlaps(const Interval& other) const { return start < other.end && other.start < end; }
    bool operator==(const Interval&) const = default;
};

struct AvailabilityRestriction {
    Id section_id;
    Interval window;
};

struct Station {
    Id id;
    std::string name;
    std::vector<Id> platform_sections;
    bool is_customer_stop_capable = true;
};

/// A traversal of one section in a given direction.
struct Traversal {
    Id section;
    Id from;
    Id to;
};

/// Node/section sequence; nodes.size() == sections.size() + 1.
struct Path {
    std::vector<Id> nodes;
    std::vector<Id> sections;

    bool empty() const { return sections.empty(); }
    bool operator==(const Path&) const = default;
};

/// Immutable microscopic infrastructure.
class Network {
public:
    Network() = default;

    static Network from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;

    std::span<const Node> nodes() const { return nodes_; }
    std::span<const TrackSection> sections() const { return sections_; }
    std::span<const Route> routes() const { return routes_; }
    std::span<const RouteExclusion> exclusions() const { return exclusions_; }
    std::span<const AvailabilityRestriction> restrictions() const { return restrictions_; }
    std::span<const Station> stations() const { return stations_; }

    const Node* find_node(const Id& id) const;
    const TrackSection* find_section(const Id& id) const;
    const Route* find_route(const Id& id) const;
    const Station* find_station(const Id& id) const;

    const Node& node(const Id& id) const;
    const TrackSection& section(const Id& id) const;
    const Station& station(const Id& id) const;

    /// Traversals leaving `node` (forward, plus reverse of bidirectional sections).
    std::span<const Traversal> departures(const Id& node) const;

    /// Station whose platform list contains the section, if any.
    const Station* station_of_section(const Id& section) const;

    bool excludes(const Id& route_a, const Id& route_b) const;

    /// Resolves a declared route id, or a synthesized "s1+s2+..." id, into a path.
    std::optional<Path> resolve_route(const Id& route_id) const;

    std::vector<AvailabilityRestriction> restrictions_on(const Id& section) const;

private:
    void index();
    void validate() const;

    std::vector<Node> nodes_;
    std::vector<TrackSection> sections_;
    std::vector<Route> routes_;
    std::vector<RouteExclusion> exclusions_;
    std::vector<AvailabilityRestriction> restrictions_;
    std::vector<Station> stations_;

    std::map<Id, std::size_t> node_index_;
    std::map<Id, std::size_t> section_index_;
    std::map<Id, std::size_t> route_index_;
    std::map<Id, std::size_t> station_index_;
    std::map<Id, std::vector<Traversal>> departures_;
    std::map<Id, std::size_t> platform_station_;
    std::set<std::pair<Id, Id>> exclusion_set_;
};

Network load_network(const nlohmann::json& doc);

std::string_view to_string(NodeKind kind);
NodeKind node_kind_from_string(std::string_view text);

/// Route id for a section sequence: "s1+s2+s3".
Id synthesized_route_id(std::span<const Id> sections);

inline constexpr std::size_t kDefaultMaxRouteSections = 32;

/// Simple paths from `from` to `to` with at most `max_sections` sections.
/// `allowed` limits the usable sections when non-null. Ordered by route id.
std::vector<Path> enumerate_paths(const Network& network, const Id& from, const Id& to,
                                  const std::set<Id>* allowed = nullptr,
                                  std::size_t max_sections = kDefaultMaxRouteSections);

/// All simple routes between two main signals, sorted by id. Declared routes keep
/// their id; other chains get a synthesized id.
std::vector<Route> routes_between(const Network& network, const Id& entry_signal,
                                  const Id& exit_signal,
                                  std::size_t max_sections = kDefaultMaxRouteSections);

bool is_restricted(const Network& network, const Id& section_id, Interval interval);

/// Nodes where single-track (bidirectional) sections meet double-track
/// (directional) sections. Sorted by id.
std::vector<Id> double_track_transitions(const Network& network);

/// Total length of the path's sections in meters.
double path_length(const Network& network, const Path& path);

}  // namespace ada
