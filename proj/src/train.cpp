#include "ada/train.hpp"

namespace ada {

using nlohmann::json;

namespace {

template <typename T>
T get(const json& j, const char* name) {
    if (!j.is_object() || !j.contains(name)) {
        throw Error(ErrorCode::MalformedDocument, std::string("missing field '") + name + "'");
    }
    try {
        return j.at(name).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedDocument, std::string("field '") + name + "': " + e.what());
    }
}

}  // namespace

std::string_view to_string(TrainCategory category) {
    switch (category) {
        case TrainCategory::Urban: return "Urban";
        case TrainCategory::Local: return "Local";
        case TrainCategory::LongDistance: return "LongDistance";
        case TrainCategory::Freight: return "Freight";
    }
    return "Local";
}

TrainCategory category_from_string(std::string_view text) {
    if (text == "Urban") return TrainCategory::Urban;
    if (text == "Local") return TrainCategory::Local;
    if (text == "LongDistance") return TrainCategory::LongDistance;
    if (text == "Freight") return TrainCategory::Freight;
    throw Error(ErrorCode::MalformedDocument, "unknown train category '" + std::string(text) + "'");
}

Train train_from_json(const json& j) {
    Train t;
    t.id = get<Id>(j, "id");
    t.priority_weight = get<double>(j, "priority_weight");
    t.v_max = get<double>(j, "v_max");
    t.accel = get<double>(j, "accel");
    t.decel = get<double>(j, "decel");
    t.category = category_from_string(get<std::string>(j, "category"));
    if (!(t.priority_weight > 0.0)) throw Error(ErrorCode::MalformedDocument, "train '" + t.id + "' priority_weight");
    if (!(t.v_max > 0.0) || !(t.accel > 0.0) || !(t.decel > 0.0)) {
        throw Error(ErrorCode::MalformedDocument, "train '" + t.id + "' kinematics must be positive");
    }
    return t;
}

json to_json(const Train& t) {
    return {{"id", t.id},       {"priority_weight", t.priority_weight},
            {"v_max", t.v_max}, {"accel", t.accel},
            {"decel", t.decel}, {"category", std::string(to_string(t.category))}};
}

TrainRun train_run_from_json(const json& j) {
    TrainRun run;
    run.train_id = get<Id>(j, "train_id");
    run.entry_signal = get<Id>(j, "entry_signal");
    run.exit_signal = get<Id>(j, "exit_signal");
    run.scheduled_entry = get<Time>(j, "scheduled_entry");
    run.scheduled_route_id = get<Id>(j, "scheduled_route_id");
    if (j.contains("stops")) {
        for (const auto& s : j.at("stops")) {
            ScheduledStop stop;
            stop.station_id = get<Id>(s, "station_id");
            stop.arrival = get<Time>(s, "arrival");
            stop.departure = get<Time>(s, "departure");
            stop.min_dwell = s.value("min_dwell", Time{0});
            stop.is_customer_stop = s.value("is_customer_stop", true);
            if (stop.departure < stop.arrival || stop.departure - stop.arrival < stop.min_dwell) {
                throw Error(ErrorCode::MalformedDocument, "stop of '" + run.train_id + "' at '" + stop.station_id +
                                                              "' violates its minimum dwell");
            }
            run.stops.push_back(std::move(stop));
        }
    }
    for (std::size_t i = 1; i < run.stops.size(); ++i) {
        if (run.stops[i].arrival < run.stops[i - 1].arrival) {
            throw Error(ErrorCode::MalformedDocument, "stops of '" + run.train_id + "' are not ordered by arrival");
        }
    }
    return run;
}

json to_json(const TrainRun& run) {
    json stops = json::array();
    for (const auto& s : run.stops) {
        stops.push_back({{"station_id", s.station_id},
                         {"arrival", s.arrival},
                         {"departure", s.departure},
                         {"min_dwell", s.min_dwell},
                         {"is_customer_stop", s.is_customer_stop}});
    }
    return {{"train_id", run.train_id},
            {"entry_signal", run.entry_signal},
            {"exit_signal", run.exit_signal},
            {"scheduled_entry", run.scheduled_entry},
            {"stops", stops},
            {"scheduled_route_id", run.scheduled_route_id}};
}

json to_json(const PositionReport& r) {
    return {{"type", "position"}, {"train_id", r.train_id}, {"node_id", r.node_id}, {"time", r.time},
            {"speed", r.speed},   {"kind", r.kind == PassKind::Arrive ? "arrive" : "depart"}};
}

json to_json(const SetRoute& r) {
    return {{"type", "set_route"}, {"train_id", r.train_id}, {"route_id", r.route_id}, {"set_at", r.set_at}};
}

LiveEvent live_event_from_json(const json& j) {
    LiveEvent ev;
    const auto type = get<std::string>(j, "type");
    if (type == "position") {
        PositionReport r;
        r.train_id = get<Id>(j, "train_id");
        r.node_id = get<Id>(j, "node_id");
        r.time = get<Time>(j, "time");
        r.speed = get<double>(j, "speed");
        r.kind = j.value("kind", std::string("arrive")) == "depart" ? PassKind::Depart : PassKind::Arrive;
        if (r.speed < 0.0) throw Error(ErrorCode::MalformedDocument, "negative speed in position report");
        ev.position = r;
    } else if (type == "set_route") {
        ev.set_route = SetRoute{get<Id>(j, "train_id"), get<Id>(j, "route_id"), get<Time>(j, "set_at")};
    } else {
        throw Error(ErrorCode::MalformedDocument, "unknown live event type '" + type + "'");
    }
    return ev;
}

}  // namespace ada
