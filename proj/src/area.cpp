#include "ada/area.hpp"

#include <algorithm>

namespace ada {

using nlohmann::json;

bool ObservationArea::has_section(const Id& section) const {
    return std::find(section_ids.begin(), section_ids.end(), section) != section_ids.end();
}

bool ObservationArea::has_boundary(const Id& node) const {
    return std::find(boundary_nodes.begin(), boundary_nodes.end(), node) != boundary_nodes.end();
}

json to_json(const ObservationArea& a) {
    json neighbors = json::object();
    for (const auto& [node, areas] : a.downstream_neighbors) neighbors[node] = areas;
    return {{"id", a.id},
            {"section_ids", a.section_ids},
            {"boundary_nodes", a.boundary_nodes},
            {"horizon", a.horizon},
            {"gap_target", a.gap_target},
            {"downstream_neighbors", neighbors}};
}

ObservationArea area_from_json(const json& j) {
    ObservationArea a;
    try {
        a.id = j.at("id").get<Id>();
        a.section_ids = j.at("section_ids").get<std::vector<Id>>();
        a.boundary_nodes = j.value("boundary_nodes", std::vector<Id>{});
        a.horizon = j.value("horizon", Time{1200});
        a.gap_target = j.value("gap_target", 0.10);
        if (j.contains("downstream_neighbors")) {
            for (const auto& [node, areas] : j.at("downstream_neighbors").items()) {
                a.downstream_neighbors[node] = areas.get<std::vector<Id>>();
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedDocument, std::string("area: ") + e.what());
    }
    return a;
}

json to_json(const BoundaryHandoff& h) {
    return {{"train_id", h.train_id},         {"entry_node", h.entry_node},
            {"earliest_entry", h.earliest_entry}, {"entry_speed", h.entry_speed},
            {"order_seq", h.boundary_order_seq},  {"produced_round", h.produced_round},
            {"from_area", h.from_area},           {"to_area", h.to_area}};
}

BoundaryHandoff handoff_from_json(const json& j) {
    BoundaryHandoff h;
    try {
        h.train_id = j.at("train_id").get<Id>();
        h.entry_node = j.at("entry_node").get<Id>();
        h.earliest_entry = j.at("earliest_entry").get<Time>();
        h.entry_speed = j.at("entry_speed").get<double>();
        h.boundary_order_seq = j.value("order_seq", std::vector<Id>{});
        h.produced_round = j.value("produced_round", 0);
        h.from_area = j.value("from_area", Id{});
        h.to_area = j.value("to_area", Id{});
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedDocument, std::string("handoff: ") + e.what());
    }
    return h;
}

}  // namespace ada
