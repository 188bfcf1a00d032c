#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "ada/error.hpp"
#include "json.hpp"

namespace ada {

enum class TrainCategory { Urban, Local, LongDistance, Freight };

std::string_view to_string(TrainCategory category);
TrainCategory category_from_string(std::string_view text);

struct Train {
    Id id;
    double priority_weight = 1.0;
    double v_max = 0.0;  // m/s
    double accel = 0.0;  // m/s^2
    double decel = 0.0;  // m/s^2
    TrainCategory category = TrainCategory::Local;
};

struct ScheduledStop {
    Id station_id;
    Time arrival = 0;
    Time departure = 0;
    Time min_dwell = 0;
    bool is_customer_stop = true;
};

struct TrainRun {
    Id train_id;
    Id entry_signal;
    Id exit_signal;
    Time scheduled_entry = 0;
    std::vector<ScheduledStop> stops;
    Id scheduled_route_id;
};

enum class PassKind { Arrive, Depart };

/// Location message emitted when a train passes (arrives at or departs from) a node.
struct PositionReport {
    Id train_id;
    Id node_id;
    Time time = 0;
    double speed = 0.0;
    PassKind kind = PassKind::Arrive;

    bool operator==(const PositionReport&) const = default;
};

struct SetRoute {
    Id train_id;
    Id route_id;
    Time set_at = 0;

    bool operator==(const SetRoute&) const = default;
};

Train train_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Train& train);
TrainRun train_run_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainRun& run);
nlohmann::json to_json(const PositionReport& report);
nlohmann::json to_json(const SetRoute& route);

/// Parses one JSONL live-event record ({type: "position"|"set_route", ...}).
struct LiveEvent {
    std::optional<PositionReport> position;
    std::optional<SetRoute> set_route;
};
LiveEvent live_event_from_json(const nlohmann::json& j);

}  // namespace ada
