#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "ada/sim.hpp"
#include "ada/timing.hpp"


namespace ada {

using nlohmann::json;

const std::vector<ScenarioPreset>& table_presets() {
    static const std::vector<ScenarioPreset> presets{
        {"table1-row1", 1800, true, false, false, false}, {"table1-row2", 500, true, true, true, true},
        {"table1-row3", 2200, true, true, true, true},    {"table1-row4", 950, true, true, true, true},
        {"table1-row5", 900, true, false, false, false},  {"table1-row6", 500, true, true, true, true},
    };
    return presets;
}

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& p : table_presets()) names.push_back(p.name);
    for (const char* n : {"fig5", "fig6", "fig7", "peak"}) names.emplace_back(n);
    return names;
}

namespace {

struct StationSpec {
    Id id;
    int platforms = 1;
    double length = 400.0;
};

/// Incremental network document builder; every section gets a one-section route.
class Builder {
public:
    void signal(const Id& id) { add_node(id, "MainSignal"); }

    void section(const Id& id, const Id& from, const Id& to, double length, double speed, bool bidirectional) {
        signal(from);
        signal(to);
        sections_.push_back({{"id", id},
                             {"from_node", from},
                             {"to_node", to},
                             {"length", length},
                             {"speed_limit", speed},
                             {"bidirectional", bidirectional}});
        routes_.push_back({{"id", "r_" + id}, {"section_ids", {id}}, {"entry_signal", from}, {"exit_signal", to}});
    }

    /// Lays a track from `from` to `to` through the given stations. Each gap between
    /// stations is split into `blocks` signalled sections. Returns the track-1 sections.
    std::vector<Id> track(const Id& prefix, const Id& from, const Id& to, const std::vector<StationSpec>& stations,
                          double gap, int blocks, double speed, bool bidirectional) {
        std::vector<Id> main;
        Id cur = from;
        int counter = 0;
        auto line = [&](const Id& target) {
            for (int b = 0; b < blocks; ++b) {
                const Id next = b + 1 == blocks ? target : prefix + "_s" + std::to_string(counter + 1);
                const Id id = prefix + "_" + std::to_string(++counter);
                section(id, cur, next, gap / blocks, speed, bidirectional);
                main.push_back(id);
                cur = next;
            }
        };
        for (const auto& st : stations) {
            const Id in = prefix + "_" + st.id + "_in";
            const Id out = prefix + "_" + st.id + "_out";
            line(in);
            for (int p = 1; p <= st.platforms; ++p) {
                const Id id = prefix + "_" + st.id + "_" + std::to_string(p);
                section(id, in, out, st.length, p == 1 ? speed : 0.6 * speed, bidirectional);
                platforms_[st.id].push_back(id);
                if (p == 1) main.push_back(id);
            }
            cur = out;
        }
        line(to);
        return main;
    }

    json doc() const {
        json stations = json::array();
        for (const auto& [id, platforms] : platforms_) {
            stations.push_back({{"id", id}, {"name", id}, {"platform_sections", platforms}});
        }
        return {{"nodes", nodes_}, {"sections", sections_}, {"routes", routes_}, {"stations", stations},
                {"exclusions", json::array()}, {"restrictions", json::array()}};
    }

private:
    void add_node(const Id& id, const char* kind) {
        if (std::find(ids_.begin(), ids_.end(), id) != ids_.end()) return;
        ids_.push_back(id);
        nodes_.push_back({{"id", id}, {"kind", kind}});
    }

    std::vector<Id> ids_;
    json nodes_ = json::array();
    json sections_ = json::array();
    json routes_ = json::array();
    std::map<Id, std::vector<Id>> platforms_;
};

Path path_from_sections(const Network& net, const Id& start, const std::vector<Id>& sections) {
    Path p;
    p.nodes.push_back(start);
    for (const auto& s : sections) {
        const auto& sec = net.section(s);
        const Id& at = p.nodes.back();
        if (sec.from_node == at) {
            p.nodes.push_back(sec.to_node);
        } else if (sec.bidirectional && sec.to_node == at) {
            p.nodes.push_back(sec.from_node);
        } else {
            throw Error(ErrorCode::MalformedDocument, "section " + s + " does not continue at " + at);
        }
        p.sections.push_back(s);
    }
    return p;
}

Train make_train(const Id& id, TrainCategory cat) {
    switch (cat) {
        case TrainCategory::Urban: return {id, 2.0, 25.0, 0.9, 0.9, cat};
        case TrainCategory::Local: return {id, 2.0, 33.0, 0.6, 0.6, cat};
        case TrainCategory::LongDistance: return {id, 4.0, 44.0, 0.5, 0.5, cat};
        case TrainCategory::Freight: return {id, 1.0, 25.0, 0.3, 0.4, cat};
    }
    return {id, 1.0, 25.0, 0.5, 0.5, cat};
}

struct StopPlan {
    Id station;
    Time dwell = 0;
    Time not_before = 0;  // earliest scheduled departure, 0 for none
};

/// Timetable from free running on `path`, stretched by `reserve`.
TrainRun timetable(const Network& net, const Train& train, const Path& path, Time entry,
                   const std::vector<StopPlan>& stops, double reserve, bool customer) {
    timing::TrainPathInput input;
    input.train = &train;
    input.path = path;
    for (const auto& s : stops) input.stops.push_back({s.station, 0, s.not_before, s.dwell, s.not_before > 0});
    input.start.kind = timing::StartCondition::Kind::Free;
    input.start.time = entry;
    input.start.not_before = entry;
    const auto pt = timing::build_path_timing(net, input, {});
    const auto best = timing::best_plan(pt, input.start, train.priority_weight);
    const auto sched = timing::evaluate(pt, pt.plans[*best], input.start, train.priority_weight);

    TrainRun run;
    run.train_id = train.id;
    run.entry_signal = path.nodes.front();
    run.exit_signal = path.nodes.back();
    run.scheduled_entry = entry;
    run.scheduled_route_id = synthesized_route_id(path.sections);
    auto stretch = [&](Time t) { return entry + static_cast<Time>(std::ceil(static_cast<double>(t - entry) * (1.0 + reserve))); };
    for (const auto& ref : pt.stops) {
        ScheduledStop s;
        s.station_id = ref.scheduled.station_id;
        s.min_dwell = ref.terminal ? 0 : ref.scheduled.min_dwell;
        s.arrival = stretch(sched.arrive[ref.boundary]);
        s.departure = ref.terminal ? s.arrival : std::max(s.arrival + s.min_dwell, stretch(sched.depart[ref.boundary]));
        s.is_customer_stop = customer;
        run.stops.push_back(s);
    }
    return run;
}

json traffic_doc(const std::vector<Train>& trains, const std::vector<TrainRun>& runs) {
    json t = json::array();
    json r = json::array();
    for (const auto& x : trains) t.push_back(to_json(x));
    for (const auto& x : runs) r.push_back(to_json(x));
    return {{"trains", t}, {"runs", r}};
}

json injection_json(const DelayInjection& d) {
    json j{{"train_id", d.train_id}, {"amount", d.amount}};
    if (d.at_node) j["at_node"] = *d.at_node;
    if (d.at_time) j["at_time"] = *d.at_time;
    return j;
}

/// Double-track corridor with a loop platform per direction at every station.
struct Corridor {
    Network net;
    std::vector<Id> east;
    std::vector<Id> west;
    std::vector<Id> stations;
    Id east_entry = "W_e", east_exit = "E_e", west_entry = "E_w", west_exit = "W_w";
};

Corridor corridor(int station_count, double gap) {
    Builder b;
    Corridor c;
    std::vector<StationSpec> specs;
    for (int i = 0; i < station_count; ++i) {
        specs.push_back({"S" + std::to_string(i + 1), 2, 400.0});
        c.stations.push_back(specs.back().id);
    }
    c.east = b.track("e", c.east_entry, c.east_exit, specs, gap, 2, 44.0, false);
    std::reverse(specs.begin(), specs.end());
    c.west = b.track("w", c.west_entry, c.west_exit, specs, gap, 2, 44.0, false);
    c.net = Network::from_json(b.doc());
    return c;
}

std::vector<StopPlan> stops_for(TrainCategory cat, const std::vector<Id>& stations) {
    std::vector<StopPlan> out;
    switch (cat) {
        case TrainCategory::Urban:
            for (const auto& s : stations) out.push_back({s, 30});
            break;
        case TrainCategory::Local:
            for (const auto& s : stations) out.push_back({s, 45});
            break;
        case TrainCategory::LongDistance:
            out.push_back({stations[stations.size() / 2], 90});
            break;
        case TrainCategory::Freight: break;
    }
    return out;
}

json corridor_traffic(const Corridor& c, int count, std::vector<TrainCategory> mix, Time period, int injections,
                      std::uint64_t seed, std::vector<DelayInjection>& injected) {
    std::mt19937_64 rng(seed);
    std::vector<Train> trains;
    std::vector<TrainRun> runs;
    std::vector<Time> entries;
    for (int i = 0; i < count; ++i) {
        entries.push_back(static_cast<Time>(rng() % static_cast<std::uint64_t>(period)));
    }
    std::sort(entries.begin(), entries.end());
    for (int i = 0; i < count; ++i) {
        const TrainCategory cat = mix[static_cast<std::size_t>(rng() % mix.size())];
        const bool eastbound = i % 2 == 0;
        char id[16];
        std::snprintf(id, sizeof id, "T%03d", i + 1);
        Train t = make_train(id, cat);
        const auto& main = eastbound ? c.east : c.west;
        const Path path = path_from_sections(c.net, eastbound ? c.east_entry : c.west_entry, main);
        auto order = c.stations;
        if (!eastbound) std::reverse(order.begin(), order.end());
        runs.push_back(timetable(c.net, t, path, entries[static_cast<std::size_t>(i)], stops_for(cat, order), 0.05,
                                 cat != TrainCategory::Freight));
        trains.push_back(t);
    }
    std::vector<std::size_t> picked;
    for (int k = 0; k < injections && k < count; ++k) {
        std::size_t idx;
        do {
            idx = static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(count));
        } while (std::find(picked.begin(), picked.end(), idx) != picked.end());
        picked.push_back(idx);
        DelayInjection d;
        d.train_id = trains[idx].id;
        d.amount = 60 + static_cast<Time>(rng() % 5) * 60;
        const auto path = c.net.resolve_route(runs[idx].scheduled_route_id);
        // Delay at a station exit or at the entry.
        const std::size_t node = static_cast<std::size_t>(rng() % (path->nodes.size() - 1));
        d.at_node = path->nodes[node];
        injected.push_back(d);
    }
    return traffic_doc(trains, runs);
}

Scenario table_preset(const ScenarioPreset& p, std::uint64_t seed, int desk_factor) {
    const Corridor c = corridor(6, 4000.0);
    std::vector<TrainCategory> mix;
    if (p.urban) mix.push_back(TrainCategory::Urban);
    if (p.local) mix.push_back(TrainCategory::Local);
    if (p.long_distance) mix.push_back(TrainCategory::LongDistance);
    if (p.freight) mix.push_back(TrainCategory::Freight);
    const int count = static_cast<int>(std::llround(static_cast<double>(p.journeys_per_day) / desk_factor));
    std::vector<DelayInjection> inj;
    json doc = c.net.to_json();
    json traffic = corridor_traffic(c, count, mix, 4 * 3600, std::max(1, count / 10), seed, inj);
    doc.update(traffic);
    doc["injections"] = json::array();
    for (const auto& d : inj) doc["injections"].push_back(injection_json(d));
    doc["name"] = p.name;
    doc["seed"] = seed;
    return scenario_from_json(doc);
}

Scenario peak_preset(std::uint64_t seed) {
    const Corridor c = corridor(4, 4000.0);
    std::vector<DelayInjection> inj;
    json doc = c.net.to_json();
    const std::vector<TrainCategory> mix{TrainCategory::Urban, TrainCategory::Local, TrainCategory::LongDistance,
                                         TrainCategory::Freight};
    doc.update(corridor_traffic(c, 15, mix, 2400, 5, seed, inj));
    doc["injections"] = json::array();
    for (const auto& d : inj) doc["injections"].push_back(injection_json(d));
    doc["name"] = "peak";
    doc["seed"] = seed;
    return scenario_from_json(doc);
}

// Area A: double track with an overtaking loop at L. Area B: single track with a
// crossing station C. Red and blue run east, blue timetabled to overtake red at L
// but running late; green runs west.
Scenario fig6_preset() {
    Builder b;
    b.track("a_e", "A_w", "T", {{"L", 2, 400.0}}, 3000.0, 2, 44.0, false);
    b.track("a_w", "T", "A_x", {{"L", 1, 400.0}}, 3000.0, 2, 44.0, false);
    b.track("b", "T", "B_e", {{"C", 2, 500.0}}, 5000.0, 1, 44.0, true);
    const Network net = Network::from_json(b.doc());

    const Train red{"red", 1.0, 30.0, 0.6, 0.6, TrainCategory::Local};
    const Train blue{"blue", 5.0, 44.0, 0.6, 0.6, TrainCategory::LongDistance};
    const Train green{"green", 1.0, 25.0, 0.3, 0.4, TrainCategory::Freight};

    const std::vector<Id> east{"a_e_1", "a_e_2", "a_e_L_2", "a_e_3", "a_e_4", "b_1", "b_C_1", "b_2"};
    const std::vector<Id> east_fast{"a_e_1", "a_e_2", "a_e_L_1", "a_e_3", "a_e_4", "b_1", "b_C_1", "b_2"};
    const std::vector<Id> west{"b_2", "b_C_2", "b_1", "a_w_1", "a_w_2", "a_w_L_1", "a_w_3", "a_w_4"};
    const TrainRun blue_run =
        timetable(net, blue, path_from_sections(net, "A_w", east_fast), 60, {{"L", 30}}, 0.03, true);
    std::vector<TrainRun> runs{
        timetable(net, red, path_from_sections(net, "A_w", east), 0,
                  {{"L", 30, blue_run.stops.front().departure + 90}, {"C", 30}}, 0.0, true),
        blue_run,
        timetable(net, green, path_from_sections(net, "B_e", west), 20, {}, 0.03, false),
    };
    json doc = net.to_json();
    doc.update(traffic_doc({red, blue, green}, runs));
    std::vector<Id> a, bsec;
    for (const auto& s : net.sections()) (s.id[0] == 'a' ? a : bsec).push_back(s.id);
    doc["areas"] = json::array({to_json(ObservationArea{"A", a, {"T"}, 1200, 0.10, {}}),
                                to_json(ObservationArea{"B", bsec, {"T"}, 1200, 0.10, {}})});
    doc["injections"] = json::array({injection_json({"blue", std::optional<Id>{"A_w"}, std::nullopt, 180})});
    doc["name"] = "fig6";
    return scenario_from_json(doc);
}

// Station X with two platform tracks. 567 is timetabled to overtake 1234 there and
// runs three minutes late.
Scenario fig7_preset() {
    Builder b;
    const auto via1 = b.track("m", "S0", "END", {{"X", 2, 300.0}, {"Y", 1, 300.0}}, 8000.0, 4, 44.0, false);
    const Network net = Network::from_json(b.doc());
    const Train slow{"1234", 2.0, 30.0, 0.6, 0.6, TrainCategory::Local};
    const Train fast{"567", 4.0, 44.0, 0.5, 0.5, TrainCategory::LongDistance};
    auto via2 = via1;
    std::replace(via2.begin(), via2.end(), Id{"m_X_1"}, Id{"m_X_2"});
    const TrainRun fast_run =
        timetable(net, fast, path_from_sections(net, "S0", via2), 120, {{"X", 30}, {"Y", 60}}, 0.03, true);
    const Time overtaken = fast_run.stops.front().departure + 90;
    std::vector<TrainRun> runs{
        timetable(net, slow, path_from_sections(net, "S0", via1), 0, {{"X", 40, overtaken}, {"Y", 40}}, 0.03, true),
        fast_run,
    };
    json doc = net.to_json();
    doc.update(traffic_doc({slow, fast}, runs));
    std::vector<Id> all;
    for (const auto& s : net.sections()) all.push_back(s.id);
    doc["areas"] = json::array({to_json(ObservationArea{"X", all, {}, 1200, 0.10, {}})});
    doc["injections"] = json::array({injection_json({"567", std::optional<Id>{"S0"}, std::nullopt, 180})});
    doc["name"] = "fig7";
    return scenario_from_json(doc);
}

// Alternating double- and single-track stretches; the transitions are the natural cuts.
Scenario fig5_preset(std::uint64_t seed) {
    Builder b;
    b.track("d1e", "W_e", "T1", {{"P", 2, 400.0}}, 4000.0, 2, 44.0, false);
    b.track("d1w", "T1", "W_w", {{"P", 2, 400.0}}, 4000.0, 2, 44.0, false);
    b.track("s1", "T1", "T2", {{"Q", 2, 500.0}}, 6000.0, 1, 33.0, true);
    b.track("d2e", "T2", "T3", {{"R", 2, 400.0}}, 4000.0, 2, 44.0, false);
    b.track("d2w", "T3", "T2", {{"R", 2, 400.0}}, 4000.0, 2, 44.0, false);
    b.track("s2", "T3", "E", {{"U", 2, 500.0}}, 6000.0, 1, 33.0, true);
    const Network net = Network::from_json(b.doc());
    std::mt19937_64 rng(seed);
    std::vector<Train> trains;
    std::vector<TrainRun> runs;
    const std::vector<Id> east{"d1e_1", "d1e_2", "d1e_P_1", "d1e_3", "d1e_4", "s1_1", "s1_Q_1", "s1_2",
                               "d2e_1", "d2e_2", "d2e_R_1", "d2e_3", "d2e_4", "s2_1", "s2_U_1", "s2_2"};
    const std::vector<Id> west{"s2_2", "s2_U_2", "s2_1", "d2w_1", "d2w_2", "d2w_R_1", "d2w_3", "d2w_4",
                               "s1_2", "s1_Q_2", "s1_1", "d1w_1", "d1w_2", "d1w_P_1", "d1w_3", "d1w_4"};
    for (int i = 0; i < 4; ++i) {
        const bool eb = i % 2 == 0;
        Train t = make_train("F" + std::to_string(i + 1), i < 2 ? TrainCategory::Local : TrainCategory::LongDistance);
        const Time entry = static_cast<Time>(i * 300 + static_cast<int>(rng() % 120));
        runs.push_back(timetable(net, t, path_from_sections(net, eb ? "W_e" : "E", eb ? east : west), entry,
                                 {{"Q", 30}, {"U", 30}}, 0.05, true));
        trains.push_back(t);
    }
    json doc = net.to_json();
    doc.update(traffic_doc(trains, runs));
    doc["injections"] = json::array();
    doc["name"] = "fig5";
    doc["seed"] = seed;
    return scenario_from_json(doc);
}

}  // namespace

json to_json(const Scenario& s) {
    json doc = s.network.to_json();
    doc.update(traffic_doc(s.trains, s.runs));
    doc["set_routes"] = json::array();
    for (const auto& r : s.set_routes) doc["set_routes"].push_back(to_json(r));
    doc["injections"] = json::array();
    for (const auto& d : s.injections) doc["injections"].push_back(injection_json(d));
    doc["areas"] = json::array();
    for (const auto& a : s.areas) doc["areas"].push_back(to_json(a));
    if (!s.mesh_boundaries.empty()) doc["mesh_boundaries"] = s.mesh_boundaries;
    doc["name"] = s.name;
    doc["seed"] = s.seed;
    doc["start_time"] = s.start_time;
    return doc;
}

Scenario scenario_from_json(const json& doc) {
    if (!doc.is_object()) throw Error(ErrorCode::MalformedDocument, "scenario must be a JSON object");
    if (doc.contains("preset")) {
        return load_preset(doc.at("preset").get<std::string>(), doc.value("seed", std::uint64_t{1}),
                           doc.value("desk_factor", 20));
    }
    Scenario s;
    try {
        s.name = doc.value("name", std::string("scenario"));
        s.seed = doc.value("seed", std::uint64_t{1});
        s.start_time = doc.value("start_time", Time{0});
        s.network = Network::from_json(doc);
        for (const auto& t : doc.value("trains", json::array())) s.trains.push_back(train_from_json(t));
        for (const auto& r : doc.value("runs", json::array())) s.runs.push_back(train_run_from_json(r));
        for (const auto& r : doc.value("set_routes", json::array())) {
            s.set_routes.push_back({r.at("train_id").get<Id>(), r.at("route_id").get<Id>(), r.value("set_at", Time{0})});
        }
        for (const auto& d : doc.value("injections", json::array())) {
            DelayInjection inj;
            inj.train_id = d.at("train_id").get<Id>();
            if (d.contains("at_node")) inj.at_node = d.at("at_node").get<Id>();
            if (d.contains("at_time")) inj.at_time = d.at("at_time").get<Time>();
            inj.amount = d.at("amount").get<Time>();
            if (inj.amount <= 0 || (!inj.at_node && !inj.at_time)) {
                throw Error(ErrorCode::MalformedDocument, "injection for " + inj.train_id + " needs a node or time and a positive amount");
            }
            s.injections.push_back(inj);
        }
        for (const auto& a : doc.value("areas", json::array())) s.areas.push_back(area_from_json(a));
        if (doc.contains("mesh_boundaries")) s.mesh_boundaries = doc.at("mesh_boundaries").get<std::vector<Id>>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedDocument, e.what());
    }

    std::set<Id> train_ids;
    for (const auto& t : s.trains) {
        if (!train_ids.insert(t.id).second) throw Error(ErrorCode::DuplicateId, "train " + t.id);
    }
    std::set<Id> run_ids;
    for (const auto& r : s.runs) {
        if (!train_ids.contains(r.train_id)) throw Error(ErrorCode::DanglingReference, "run for unknown train " + r.train_id);
        if (!run_ids.insert(r.train_id).second) throw Error(ErrorCode::DuplicateId, "second run for " + r.train_id);
        planned_path(s.network, r, {});  // validates the scheduled route
        for (const auto& st : r.stops) {
            if (s.network.find_station(st.station_id) == nullptr) {
                throw Error(ErrorCode::DanglingReference, "stop at unknown station " + st.station_id);
            }
        }
    }
    for (const auto& d : s.injections) {
        if (!train_ids.contains(d.train_id)) throw Error(ErrorCode::DanglingReference, "injection for " + d.train_id);
    }
    for (const auto& a : s.areas) {
        for (const auto& sec : a.section_ids) {
            if (s.network.find_section(sec) == nullptr) throw Error(ErrorCode::DanglingReference, "area section " + sec);
        }
    }
    return s;
}

Scenario load_preset(const std::string& name, std::uint64_t seed, int desk_factor) {
    if (desk_factor <= 0) throw Error(ErrorCode::MalformedDocument, "desk factor must be positive");
    for (const auto& p : table_presets()) {
        if (p.name == name) return table_preset(p, seed, desk_factor);
    }
    if (name == "fig5") return fig5_preset(seed);
    if (name == "fig6") return fig6_preset();
    if (name == "fig7") return fig7_preset();
    if (name == "peak") return peak_preset(seed);
    throw Error(ErrorCode::UnknownPreset, name);
}

Scenario load_scenario(const std::string& preset_or_path, std::uint64_t seed) {
    const auto names = preset_names();
    if (std::find(names.begin(), names.end(), preset_or_path) != names.end()) return load_preset(preset_or_path, seed);
    std::ifstream in(preset_or_path);
    if (!in) throw Error(ErrorCode::MalformedDocument, "cannot read scenario '" + preset_or_path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedDocument, e.what());
    }
    return scenario_from_json(doc);
}

}  // namespace ada
