#include "ada/infra.hpp"

#include <algorithm>
#include <functional>
#include <tuple>
#include <sstream>

namespace ada {

using nlohmann::json;

namespace {

template <typename T>
T field(const json& obj, const char* name) {
    if (!obj.is_object() || !obj.contains(name)) {
        throw Error(ErrorCode::MalformedDocument, std::string("missing field '") + name + "'");
    }
    try {
        return obj.at(name).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedDocument, std::string("field '") + name + "': " + e.what());
    }
}

const json& array_field(const json& doc, const char* name) {
    static const json empty = json::array();
    if (!doc.contains(name)) return empty;
    const json& value = doc.at(name);
    if (!value.is_array()) {
        throw Error(ErrorCode::MalformedDocument, std::string("'") + name + "' must be an array");
    }
    return value;
}

Interval parse_window(const json& value) {
    Interval window;
    if (value.is_array() && value.size() == 2) {
        window.start = value[0].get<Time>();
        window.end = value[1].get<Time>();
    } else if (value.is_object()) {
        window.start = field<Time>(value, "start");
        window.end = field<Time>(value, "end");
    } else {
        throw Error(ErrorCode::MalformedDocument, "restriction window must be [start, end)");
    }
    return window;
}

template <typename T>
void index_ids(const std::vector<T>& items, std::map<Id, std::size_t>& out, const char* what) {
    out.clear();
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (!out.emplace(items[i].id, i).second) {
            throw Error(ErrorCode::DuplicateId, std::string(what) + " '" + items[i].id + "'");
        }
    }
}

std::vector<Id> split_route_id(const Id& id) {
    std::vector<Id> parts;
    std::string part;
    std::istringstream in(id);
    while (std::getline(in, part, '+')) {
        if (!part.empty()) parts.push_back(part);
    }
    return parts;
}

}  // namespace

std::string_view to_string(NodeKind kind) {
    switch (kind) {
        case NodeKind::MainSignal: return "MainSignal";
        case NodeKind::StationPoint: return "StationPoint";
        case NodeKind::Junction: return "Junction";
        case NodeKind::Boundary: return "Boundary";
    }
    return "Junction";
}

NodeKind node_kind_from_string(std::string_view text) {
    if (text == "MainSignal") return NodeKind::MainSignal;
    if (text == "StationPoint") return NodeKind::StationPoint;
    if (text == "Junction") return NodeKind::Junction;
    if (text == "Boundary") return NodeKind::Boundary;
    throw Error(ErrorCode::MalformedDocument, "unknown node kind '" + std::string(text) + "'");
}

Id synthesized_route_id(std::span<const Id> sections) {
    Id id;
    for (const auto& s : sections) {
        if (!id.empty()) id += '+';
        id += s;
    }
    return id;
}

Network Network::from_json(const json& doc) {
    if (!doc.is_object()) throw Error(ErrorCode::MalformedDocument, "scenario must be a JSON object");
    Network net;
    for (const auto& n : array_field(doc, "nodes")) {
        Node node;
        node.id = field<Id>(n, "id");
        node.kind = node_kind_from_string(field<std::string>(n, "kind"));
        if (n.contains("station") && !n.at("station").is_null()) node.station = field<Id>(n, "station");
        net.nodes_.push_back(std::move(node));
    }
    for (const auto& s : array_field(doc, "sections")) {
        TrackSection sec;
        sec.id = field<Id>(s, "id");
        sec.from_node = field<Id>(s, "from_node");
        sec.to_node = field<Id>(s, "to_node");
        sec.length = field<double>(s, "length");
        sec.speed_limit = field<double>(s, "speed_limit");
        sec.bidirectional = s.value("bidirectional", false);
        if (s.contains("headway") && !s.at("headway").is_null()) sec.headway = field<Time>(s, "headway");
        net.sections_.push_back(std::move(sec));
    }
    for (const auto& r : array_field(doc, "routes")) {
        Route route;
        route.id = field<Id>(r, "id");
        route.section_ids = field<std::vector<Id>>(r, "section_ids");
        route.entry_signal = field<Id>(r, "entry_signal");
        route.exit_signal = field<Id>(r, "exit_signal");
        net.routes_.push_back(std::move(route));
    }
    for (const auto& e : array_field(doc, "exclusions")) {
        net.exclusions_.push_back({field<Id>(e, "route_a"), field<Id>(e, "route_b")});
    }
    for (const auto& r : array_field(doc, "restrictions")) {
        if (!r.contains("window")) throw Error(ErrorCode::MalformedDocument, "restriction without window");
        net.restrictions_.push_back({field<Id>(r, "section_id"), parse_window(r.at("window"))});
    }
    for (const auto& s : array_field(doc, "stations")) {
        Station st;
        st.id = field<Id>(s, "id");
        st.name = s.value("name", st.id);
        st.platform_sections = field<std::vector<Id>>(s, "platform_sections");
        st.is_customer_stop_capable = s.value("is_customer_stop_capable", true);
        net.stations_.push_back(std::move(st));
    }
    net.index();
    net.validate();
    return net;
}

Network load_network(const json& doc) { return Network::from_json(doc); }

json Network::to_json() const {
    json doc;
    doc["nodes"] = json::array();
    for (const auto& n : nodes_) {
        json j{{"id", n.id}, {"kind", std::string(ada::to_string(n.kind))}};
        if (n.station) j["station"] = *n.station;
        doc["nodes"].push_back(std::move(j));
    }
    doc["sections"] = json::array();
    for (const auto& s : sections_) {
        json j{{"id", s.id},
               {"from_node", s.from_node},
               {"to_node", s.to_node},
               {"length", s.length},
               {"speed_limit", s.speed_limit},
               {"bidirectional", s.bidirectional}};
        if (s.headway) j["headway"] = *s.headway;
        doc["sections"].push_back(std::move(j));
    }
    doc["routes"] = json::array();
    for (const auto& r : routes_) {
        doc["routes"].push_back({{"id", r.id},
                                 {"section_ids", r.section_ids},
                                 {"entry_signal", r.entry_signal},
                                 {"exit_signal", r.exit_signal}});
    }
    doc["exclusions"] = json::array();
    for (const auto& e : exclusions_) doc["exclusions"].push_back({{"route_a", e.route_a}, {"route_b", e.route_b}});
    doc["restrictions"] = json::array();
    for (const auto& r : restrictions_) {
        doc["restrictions"].push_back(
            {{"section_id", r.section_id}, {"window", {{"start", r.window.start}, {"end", r.window.end}}}});
    }
    doc["stations"] = json::array();
    for (const auto& s : stations_) {
        doc["stations"].push_back({{"id", s.id},
                                   {"name", s.name},
                                   {"platform_sections", s.platform_sections},
                                   {"is_customer_stop_capable", s.is_customer_stop_capable}});
    }
    return doc;
}

void Network::index() {
    index_ids(nodes_, node_index_, "node");
    index_ids(sections_, section_index_, "section");
    index_ids(routes_, route_index_, "route");
    index_ids(stations_, station_index_, "station");
    departures_.clear();
    for (const auto& s : sections_) {
        departures_[s.from_node].push_back({s.id, s.from_node, s.to_node});
        if (s.bidirectional) departures_[s.to_node].push_back({s.id, s.to_node, s.from_node});
    }
    for (auto& [node, list] : departures_) {
        std::sort(list.begin(), list.end(), [](const Traversal& a, const Traversal& b) {
            return std::tie(a.section, a.to) < std::tie(b.section, b.to);
        });
    }
    platform_station_.clear();
    for (std::size_t i = 0; i < stations_.size(); ++i) {
        for (const auto& p : stations_[i].platform_sections) platform_station_.emplace(p, i);
    }
    exclusion_set_.clear();
    for (const auto& e : exclusions_) {
        exclusion_set_.emplace(e.route_a, e.route_b);
        exclusion_set_.emplace(e.route_b, e.route_a);
    }
}

namespace {

// Walks a section list starting at `start`; returns the node sequence or nullopt if
// the chain is broken or traverses a directional section backwards.
std::optional<std::vector<Id>> walk(const Network& net, const std::vector<Id>& sections, const Id& start) {
    std::vector<Id> nodes{start};
    Id cur = start;
    for (const auto& sid : sections) {
        const TrackSection* s = net.find_section(sid);
        if (s == nullptr) return std::nullopt;
        if (s->from_node == cur) {
            cur = s->to_node;
        } else if (s->bidirectional && s->to_node == cur) {
            cur = s->from_node;
        } else {
            return std::nullopt;
        }
        nodes.push_back(cur);
    }
    return nodes;
}

}  // namespace

void Network::validate() const {
    for (const auto& n : nodes_) {
        if (n.station && !station_index_.contains(*n.station)) {
            throw Error(ErrorCode::DanglingReference, "node '" + n.id + "' references station '" + *n.station + "'");
        }
    }
    for (const auto& s : sections_) {
        if (!node_index_.contains(s.from_node) || !node_index_.contains(s.to_node)) {
            throw Error(ErrorCode::DanglingReference, "section '" + s.id + "' references an unknown node");
        }
        if (s.from_node == s.to_node) {
            throw Error(ErrorCode::MalformedDocument, "section '" + s.id + "' is a self loop");
        }
        if (!(s.length > 0.0)) throw Error(ErrorCode::NonPositiveLength, "section '" + s.id + "' length");
        if (!(s.speed_limit > 0.0)) throw Error(ErrorCode::NonPositiveLength, "section '" + s.id + "' speed limit");
        if (s.headway && *s.headway < 0) throw Error(ErrorCode::MalformedDocument, "section '" + s.id + "' headway");
    }
    std::set<Id> signals_in_routes;
    for (const auto& r : routes_) {
        if (!node_index_.contains(r.entry_signal) || !node_index_.contains(r.exit_signal)) {
            throw Error(ErrorCode::DanglingReference, "route '" + r.id + "' references an unknown signal");
        }
        for (const auto& sid : r.section_ids) {
            if (!section_index_.contains(sid)) {
                throw Error(ErrorCode::DanglingReference, "route '" + r.id + "' references section '" + sid + "'");
            }
        }
        if (r.section_ids.empty()) throw Error(ErrorCode::MalformedDocument, "route '" + r.id + "' is empty");
        if (node(r.entry_signal).kind != NodeKind::MainSignal || node(r.exit_signal).kind != NodeKind::MainSignal) {
            throw Error(ErrorCode::MalformedDocument, "route '" + r.id + "' must start and end at main signals");
        }
        auto nodes = walk(*this, r.section_ids, r.entry_signal);
        if (!nodes || nodes->back() != r.exit_signal) {
            throw Error(ErrorCode::MalformedDocument, "route '" + r.id + "' is not a connected chain");
        }
        signals_in_routes.insert(nodes->begin(), nodes->end());
    }
    for (const auto& n : nodes_) {
        if (n.kind == NodeKind::MainSignal && !signals_in_routes.contains(n.id)) {
            throw Error(ErrorCode::MalformedDocument, "main signal '" + n.id + "' belongs to no route");
        }
    }
    for (const auto& e : exclusions_) {
        if (!route_index_.contains(e.route_a) || !route_index_.contains(e.route_b)) {
            throw Error(ErrorCode::DanglingReference, "exclusion references an unknown route");
        }
        if (e.route_a == e.route_b) {
            throw Error(ErrorCode::MalformedDocument, "route '" + e.route_a + "' cannot exclude itself");
        }
    }
    for (const auto& r : restrictions_) {
        if (!section_index_.contains(r.section_id)) {
            throw Error(ErrorCode::DanglingReference, "restriction references section '" + r.section_id + "'");
        }
        if (r.window.start >= r.window.end) {
            throw Error(ErrorCode::MalformedDocument, "restriction on '" + r.section_id + "' has start >= end");
        }
    }
    for (const auto& st : stations_) {
        for (const auto& p : st.platform_sections) {
            if (!section_index_.contains(p)) {
                throw Error(ErrorCode::DanglingReference, "station '" + st.id + "' references section '" + p + "'");
            }
        }
    }
}

const Node* Network::find_node(const Id& id) const {
    auto it = node_index_.find(id);
    return it == node_index_.end() ? nullptr : &nodes_[it->second];
}

const TrackSection* Network::find_section(const Id& id) const {
    auto it = section_index_.find(id);
    return it == section_index_.end() ? nullptr : &sections_[it->second];
}

const Route* Network::find_route(const Id& id) const {
    auto it = route_index_.find(id);
    return it == route_index_.end() ? nullptr : &routes_[it->second];
}

const Station* Network::find_station(const Id& id) const {
    auto it = station_index_.find(id);
    return it == station_index_.end() ? nullptr : &stations_[it->second];
}

const Node& Network::node(const Id& id) const {
    const Node* n = find_node(id);
    if (n == nullptr) throw Error(ErrorCode::UnknownNode, id);
    return *n;
}

const TrackSection& Network::section(const Id& id) const {
    const TrackSection* s = find_section(id);
    if (s == nullptr) throw Error(ErrorCode::UnknownSection, id);
    return *s;
}

const Station& Network::station(const Id& id) const {
    const Station* s = find_station(id);
    if (s == nullptr) throw Error(ErrorCode::DanglingReference, "station " + id);
    return *s;
}

std::span<const Traversal> Network::departures(const Id& node) const {
    auto it = departures_.find(node);
    if (it == departures_.end()) return {};
    return it->second;
}

const Station* Network::station_of_section(const Id& section) const {
    auto it = platform_station_.find(section);
    return it == platform_station_.end() ? nullptr : &stations_[it->second];
}

bool Network::excludes(const Id& route_a, const Id& route_b) const {
    return exclusion_set_.contains({route_a, route_b});
}

std::optional<Path> Network::resolve_route(const Id& route_id) const {
    if (const Route* r = find_route(route_id)) {
        auto nodes = walk(*this, r->section_ids, r->entry_signal);
        if (!nodes) return std::nullopt;
        return Path{*nodes, r->section_ids};
    }
    auto sections = split_route_id(route_id);
    if (sections.empty()) return std::nullopt;
    const TrackSection* first = find_section(sections.front());
    if (first == nullptr) return std::nullopt;
    for (const Id& start : {first->from_node, first->to_node}) {
        if (start == first->to_node && !first->bidirectional) continue;
        if (auto nodes = walk(*this, sections, start)) return Path{*nodes, sections};
    }
    return std::nullopt;
}

std::vector<AvailabilityRestriction> Network::restrictions_on(const Id& section) const {
    std::vector<AvailabilityRestriction> out;
    for (const auto& r : restrictions_) {
        if (r.section_id == section) out.push_back(r);
    }
    return out;
}

std::vector<Path> enumerate_paths(const Network& network, const Id& from, const Id& to, const std::set<Id>* allowed,
                                  std::size_t max_sections) {
    network.node(from);
    network.node(to);
    std::vector<Path> out;
    Path current;
    current.nodes.push_back(from);
    std::set<Id> visited{from};
    std::function<void(const Id&)> dfs = [&](const Id& at) {
        if (at == to && !current.sections.empty()) {
            out.push_back(current);
            return;
        }
        if (current.sections.size() >= max_sections) return;
        for (const auto& t : network.departures(at)) {
            if (allowed != nullptr && !allowed->contains(t.section)) continue;
            if (visited.contains(t.to)) continue;
            visited.insert(t.to);
            current.nodes.push_back(t.to);
            current.sections.push_back(t.section);
            dfs(t.to);
            current.sections.pop_back();
            current.nodes.pop_back();
            visited.erase(t.to);
        }
    };
    if (from != to) dfs(from);
    std::sort(out.begin(), out.end(), [](const Path& a, const Path& b) {
        return synthesized_route_id(a.sections) < synthesized_route_id(b.sections);
    });
    return out;
}

std::vector<Route> routes_between(const Network& network, const Id& entry_signal, const Id& exit_signal,
                                  std::size_t max_sections) {
    for (const Id& id : {entry_signal, exit_signal}) {
        const Node* n = network.find_node(id);
        if (n == nullptr) throw Error(ErrorCode::UnknownNode, id);
        if (n->kind != NodeKind::MainSignal) throw Error(ErrorCode::UnknownNode, id + " is not a main signal");
    }
    std::vector<Route> out;
    for (auto& path : enumerate_paths(network, entry_signal, exit_signal, nullptr, max_sections)) {
        Route route{synthesized_route_id(path.sections), path.sections, entry_signal, exit_signal};
        for (const auto& declared : network.routes()) {
            if (declared.section_ids == route.section_ids && declared.entry_signal == entry_signal &&
                declared.exit_signal == exit_signal) {
                route.id = declared.id;
                break;
            }
        }
        out.push_back(std::move(route));
    }
    std::sort(out.begin(), out.end(), [](const Route& a, const Route& b) { return a.id < b.id; });
    return out;
}

bool is_restricted(const Network& network, const Id& section_id, Interval interval) {
    if (network.find_section(section_id) == nullptr) throw Error(ErrorCode::UnknownSection, section_id);
    for (const auto& r : network.restrictions()) {
        if (r.section_id == section_id && r.window.overlaps(interval)) return true;
    }
    return false;
}

std::vector<Id> double_track_transitions(const Network& network) {
    std::map<Id, std::pair<bool, bool>> incident;  // (has single-track, has double-track)
    for (const auto& s : network.sections()) {
        for (const Id& n : {s.from_node, s.to_node}) {
            auto& flags = incident[n];
            (s.bidirectional ? flags.first : flags.second) = true;
        }
    }
    std::vector<Id> out;
    for (const auto& [node, flags] : incident) {
        if (flags.first && flags.second) out.push_back(node);
    }
    return out;
}

double path_length(const Network& network, const Path& path) {
    double total = 0.0;
    for (const auto& s : path.sections) total += network.section(s).length;
    return total;
}

}  // namespace ada
