#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>

#include "httplib.h"

#include "ada/service.hpp"

namespace ada {

using nlohmann::json;

namespace {

std::string normalize_key(std::string key) {
    for (auto& c : key) {
        if (c == '-') c = '_';
    }
    return key;
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
    std::istringstream in(value);
    T v{};
    in >> v;
    if (in.fail() || !in.eof()) throw Error(ErrorCode::MalformedDocument, "bad value for " + key + ": '" + value + "'");
    return v;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

HttpResponse json_response(int status, const json& body) { return {status, body.dump(), {}}; }

HttpResponse error_response(int status, std::string_view code, const std::string& message) {
    return json_response(status, json{{"error", code}, {"message", message}});
}

HttpResponse error_response(const Error& e) {
    int status = 400;
    switch (e.code()) {
        case ErrorCode::UnknownRecommendation:
        case ErrorCode::UnknownArea:
        case ErrorCode::UnknownTrain:
            status = 404;
            break;
        case ErrorCode::InvalidTransition:
        case ErrorCode::FeedbackAlreadySet:
            status = 409;
            break;
        default:
            break;
    }
    return error_response(status, to_string(e.code()), e.what());
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : path) {
        if (c == '/') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

json parse_body(const std::string& body) {
    if (trim(body).empty()) return json::object();
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::MalformedDocument, "body must be a JSON object");
    return j;
}

/// Shortest undirected distance of every area node from a reference node.
std::map<Id, double> node_positions(const Network& network, const ObservationArea& area) {
    std::map<Id, std::vector<std::pair<Id, double>>> adj;
    for (const auto& s : area.section_ids) {
        const auto& sec = network.section(s);
        adj[sec.from_node].push_back({sec.to_node, sec.length});
        adj[sec.to_node].push_back({sec.from_node, sec.length});
    }
    std::map<Id, double> dist;
    if (adj.empty()) return dist;
    std::vector<Id> bounds = area.boundary_nodes;
    std::sort(bounds.begin(), bounds.end());
    const Id ref = !bounds.empty() && adj.contains(bounds.front()) ? bounds.front() : adj.begin()->first;
    using Item = std::pair<double, Id>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
    dist[ref] = 0.0;
    open.push({0.0, ref});
    while (!open.empty()) {
        auto [d, n] = open.top();
        open.pop();
        if (d > dist[n]) continue;
        for (const auto& [m, len] : adj[n]) {
            auto it = dist.find(m);
            if (it == dist.end() || d + len < it->second) {
                dist[m] = d + len;
                open.push({d + len, m});
            }
        }
    }
    return dist;
}

json polyline(const Trajectory& t, const std::map<Id, double>& pos, Time from, Time to) {
    json pts = json::array();
    auto add = [&](Time time, double d) {
        if (time >= from && time <= to) pts.push_back(json::array({time, d}));
    };
    for (const auto& p : t.passages) {
        auto it = pos.find(p.node);
        if (it == pos.end()) continue;
        add(p.arrive, it->second);
        if (p.depart != p.arrive) add(p.depart, it->second);
    }
    return pts;
}

RecommendationRegistry open_registry(const std::string& path) {
    if (!path.empty() && std::filesystem::exists(path)) return RecommendationRegistry::replay(path);
    return RecommendationRegistry(path);
}

}  // namespace

std::vector<ObservationArea> scenario_areas(const Scenario& s) {
    if (!s.areas.empty()) return s.areas;
    PartitionRules rules;
    rules.manual_boundaries = s.mesh_boundaries;
    return section_network(s.network, rules);
}

void set_option(RunConfig& c, const std::string& raw_key, const std::string& value) {
    const auto key = normalize_key(raw_key);
    if (key == "scenario") {
        c.scenario = value;
    } else if (key == "seed") {
        c.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "bind") {
        c.bind = value;
    } else if (key == "cadence") {
        c.cadence = parse_number<Time>(key, value);
        if (c.cadence <= 0) throw Error(ErrorCode::MalformedDocument, "cadence must be positive");
    } else if (key == "time_limit") {
        c.time_limit = parse_number<double>(key, value);
        if (!(c.time_limit > 0)) throw Error(ErrorCode::MalformedDocument, "time_limit must be positive");
    } else if (key == "gap_target") {
        c.gap_target = parse_number<double>(key, value);
        if (!(c.gap_target > 0 && c.gap_target < 1)) throw Error(ErrorCode::MalformedDocument, "gap_target must be in (0,1)");
    } else if (key == "mesh_rounds") {
        c.mesh_rounds = parse_number<int>(key, value);
        if (c.mesh_rounds < 1) throw Error(ErrorCode::MalformedDocument, "mesh_rounds must be at least 1");
    } else if (key == "event_log") {
        c.event_log = value;
    } else if (key == "speed") {
        c.speed = parse_number<double>(key, value);
        if (!(c.speed > 0)) throw Error(ErrorCode::MalformedDocument, "speed must be positive");
    } else {
        throw Error(ErrorCode::MalformedDocument, "unknown option '" + raw_key + "'");
    }
}

RunConfig load_config(const std::string& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MalformedDocument, "cannot read config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    const auto t = trim(text);
    if (!t.empty() && t.front() == '{') {
        const json j = json::parse(t, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::MalformedDocument, "config is not a JSON object");
        for (const auto& [k, v] : j.items()) set_option(base, k, v.is_string() ? v.get<std::string>() : v.dump());
        return base;
    }
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::MalformedDocument, "expected key=value: " + line);
        set_option(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return base;
}

json to_json(const Metrics& m) {
    return json{{"runs", m.runs},
                {"runs_within_gap", m.runs_within_gap},
                {"pct_within_gap", m.pct_within_gap()},
                {"mean_objective", m.mean_objective()},
                {"mesh_rounds_to_fixed_point",
                 m.mesh_rounds_to_fixed_point ? json(*m.mesh_rounds_to_fixed_point) : json(nullptr)}};
}

Service::Service(RunConfig config)
    : config_(std::move(config)),
      sim_(load_scenario(config_.scenario, config_.seed)),
      areas_(scenario_areas(sim_.scenario())),
      registry_(open_registry(config_.event_log)) {
    next_solve_ = sim_.world().clock;
    for (const auto& a : areas_) views_[a.id].id = a.id;
}

Service::~Service() { stop(); }

Time Service::clock() const {
    std::lock_guard lock(mu_);
    return sim_.world().clock;
}

Metrics Service::metrics() const {
    std::lock_guard lock(mu_);
    return metrics_;
}

std::vector<AreaView> Service::areas() const {
    std::lock_guard lock(mu_);
    std::vector<AreaView> out;
    for (const auto& a : areas_) out.push_back(views_.at(a.id));
    return out;
}

void Service::advance(Time dt) {
    if (dt < 0) throw Error(ErrorCode::MalformedDocument, "dt must not be negative");
    const Time target = clock() + dt;
    while (true) {
        const Time now = clock();
        if (now >= next_solve_) {
            solve_cycle();
            while (next_solve_ <= now) next_solve_ += config_.cadence;
        }
        if (now >= target) break;
        const Time to = std::min(target, next_solve_);
        {
            std::lock_guard lock(mu_);
            sim_.step(to - now);
        }
        registry_.expire(to);
    }
}

void Service::solve_cycle() {
    std::lock_guard cycle(solve_mu_);
    WorldState world;
    {
        std::lock_guard lock(mu_);
        world = sim_.world();
    }
    MeshConfig mc;
    mc.max_rounds = config_.mesh_rounds;
    mc.params.time_limit = config_.time_limit;
    mc.params.gap_target = config_.gap_target;
    const auto result = run_to_fixed_point(areas_, world, sim_.network(), mc);

    std::lock_guard lock(mu_);
    const Network& net = sim_.network();
    const Time now = sim_.world().clock;
    metrics_.mesh_rounds_to_fixed_point = result.fixed_point_round;
    if (result.rounds.empty()) return;
    const auto& last = result.rounds.back();
    for (std::size_t k = 0; k < areas_.size(); ++k) {
        const auto& o = last.areas[k];
        AreaView v;
        v.id = areas_[k].id;
        v.solved_at = world.clock;
        v.error = o.error;
        try {
            v.prognosis = prognosis(o.snapshot, net);
            v.conflicts = detect_conflicts(v.prognosis, net, {}, o.snapshot.active_restrictions).size();
        } catch (const Error& e) {
            if (v.error.empty()) v.error = e.what();
        }
        ++metrics_.runs;
        if (o.solution) {
            const auto& sol = *o.solution;
            v.status = sol.status;
            v.objective = sol.objective;
            v.gap = sol.gap;
            if (sol.status == SolveStatus::OptimalWithinGap) ++metrics_.runs_within_gap;
            metrics_.objective_sum += sol.objective;
            if (!sol.trajectories.empty()) {
                v.planned = sol.trajectories;
                const auto traced = trace(sol, sim_.world(), net, areas_[k]);
                const auto base = make_baseline(o.snapshot, net);
                registry_.add(derive_recommendations(traced, base, net, now), now);
            }
        }
        views_[v.id] = std::move(v);
    }
    registry_.expire(now);
}

void Service::realize(const Recommendation& r) {
    std::lock_guard lock(mu_);
    try {
        for (const auto& o : r.orders) sim_.realize_order(o);
        if (r.route) sim_.set_route(*r.route);
    } catch (const Error& e) {
        // The world moved on since the recommendation was derived; the next cycle replans.
        std::fprintf(stderr, "realizing %s: %s\n", r.id.c_str(), e.what());
    }
}

HttpResponse Service::act(const Id& rec, const std::string& role, const json& body) {
    const auto action = body.value("action", std::string{});
    RecommendationAction a;
    if (role == "dispatcher" && action == "accept") {
        a = RecommendationAction::DispatcherAccept;
    } else if (role == "dispatcher" && action == "reject") {
        a = RecommendationAction::DispatcherReject;
    } else if (role == "setter" && action == "accept") {
        a = RecommendationAction::SetterAccept;
    } else if (role == "setter" && action == "reject") {
        a = RecommendationAction::SetterReject;
    } else {
        return error_response(400, "MalformedDocument", "action must be accept or reject");
    }
    const auto r = registry_.apply(rec, a, clock());
    if (r.status == RecommendationStatus::RealizedBySetter) realize(r);
    return json_response(200, to_json(r));
}

json Service::time_distance(const Id& area_id, Time from, Time to) const {
    const auto it = std::find_if(areas_.begin(), areas_.end(), [&](const ObservationArea& a) { return a.id == area_id; });
    const auto pos = node_positions(sim_.network(), *it);
    std::lock_guard lock(mu_);
    const auto& v = views_.at(area_id);
    std::map<Id, json> trains;
    for (const auto& t : v.prognosis) {
        trains[t.train_id]["train_id"] = t.train_id;
        trains[t.train_id]["prognosis"] = polyline(t, pos, from, to);
    }
    for (const auto& t : v.planned) {
        trains[t.train_id]["train_id"] = t.train_id;
        trains[t.train_id]["planned"] = polyline(t, pos, from, to);
    }
    json list = json::array();
    for (auto& [id, j] : trains) {
        if (!j.contains("prognosis")) j["prognosis"] = json::array();
        if (!j.contains("planned")) j["planned"] = json::array();
        list.push_back(std::move(j));
    }
    json nodes = json::array();
    for (const auto& [n, d] : pos) nodes.push_back({{"node", n}, {"distance", d}, {"boundary", it->has_boundary(n)}});
    return json{{"area", area_id}, {"clock", sim_.world().clock}, {"nodes", nodes}, {"trains", list}};
}

HttpResponse Service::handle(const HttpRequest& request) {
    try {
        return dispatch_route(request);
    } catch (const Error& e) {
        return error_response(e);
    } catch (const std::exception& e) {
        return error_response(500, "Internal", e.what());
    }
}

HttpResponse Service::dispatch_route(const HttpRequest& q) {
    const auto seg = split_path(q.path);
    const bool get = q.method == "GET";
    const bool post = q.method == "POST";
    auto known_area = [&](const Id& id) {
        return std::any_of(areas_.begin(), areas_.end(), [&](const ObservationArea& a) { return a.id == id; });
    };

    if (get && seg.size() == 1 && seg[0] == "areas") {
        json out = json::array();
        for (const auto& v : areas()) {
            const auto& def = *std::find_if(areas_.begin(), areas_.end(), [&](const auto& a) { return a.id == v.id; });
            out.push_back({{"id", v.id},
                           {"solved_at", v.solved_at},
                           {"status", v.status ? json(to_string(*v.status)) : json(nullptr)},
                           {"objective", v.objective},
                           {"gap", v.gap},
                           {"conflicts", v.conflicts},
                           {"error", v.error},
                           {"sections", def.section_ids},
                           {"boundary_nodes", def.boundary_nodes}});
        }
        return json_response(200, out);
    }
    if (get && seg.size() == 3 && seg[0] == "areas" && seg[2] == "recommendations") {
        if (!known_area(seg[1])) return error_response(404, "UnknownArea", seg[1]);
        std::optional<RecommendationStatus> status;
        if (auto it = q.query.find("status"); it != q.query.end() && !it->second.empty()) {
            status = status_from_string(it->second);
        }
        const std::string etag = "\"" + std::to_string(registry_.version()) + "\"";
        if (!q.if_none_match.empty() && q.if_none_match == etag) return {304, {}, etag};
        json out = json::array();
        for (const auto& r : registry_.list(seg[1], status)) out.push_back(to_json(r));
        auto resp = json_response(200, out);
        resp.etag = etag;
        return resp;
    }
    if (get && seg.size() == 3 && seg[0] == "areas" && seg[2] == "timedistance") {
        if (!known_area(seg[1])) return error_response(404, "UnknownArea", seg[1]);
        auto bound = [&](const char* key, Time fallback) {
            auto it = q.query.find(key);
            if (it == q.query.end() || it->second.empty()) return fallback;
            return parse_number<Time>(key, it->second);
        };
        const Time from = bound("from", std::numeric_limits<Time>::min());
        const Time to = bound("to", std::numeric_limits<Time>::max());
        return json_response(200, time_distance(seg[1], from, to));
    }
    if (get && seg.size() == 1 && seg[0] == "metrics") return json_response(200, to_json(metrics()));
    if (get && seg.size() == 1 && seg[0] == "sim") {
        return json_response(200, json{{"clock", clock()}, {"paused", paused_.load()}});
    }
    if (post && seg.size() == 3 && seg[0] == "recommendations") {
        const auto body = parse_body(q.body);
        if (seg[2] == "dispatcher" || seg[2] == "setter") return act(seg[1], seg[2], body);
        if (seg[2] == "feedback") {
            const auto thumb = thumb_from_string(body.value("thumb", std::string{}));
            registry_.record_feedback(seg[1], thumb, clock());
            return {204, {}, {}};
        }
    }
    if (post && seg.size() == 2 && seg[0] == "sim" && seg[1] == "control") {
        const auto body = parse_body(q.body);
        const auto action = body.value("action", std::string{});
        if (action == "pause") {
            paused_ = true;
        } else if (action == "resume") {
            paused_ = false;
        } else if (action == "step") {
            const auto dt = body.value("dt", Time{0});
            if (dt <= 0) return error_response(400, "MalformedDocument", "step needs dt > 0");
            advance(dt);
        } else {
            return error_response(400, "MalformedDocument", "action must be pause, resume or step");
        }
        return {204, {}, {}};
    }
    return error_response(404, "NotFound", q.method + " " + q.path);
}

void Service::serve() {
    const auto colon = config_.bind.rfind(':');
    if (colon == std::string::npos) throw Error(ErrorCode::MalformedDocument, "bind must be host:port");
    const std::string host = config_.bind.substr(0, colon);
    const int port = parse_number<int>("bind", config_.bind.substr(colon + 1));

    httplib::Server svr;
    auto handler = [this](const httplib::Request& in, httplib::Response& out) {
        HttpRequest r{in.method, in.path, {}, in.body, in.get_header_value("If-None-Match")};
        for (const auto& [k, v] : in.params) r.query[k] = v;
        const auto resp = handle(r);
        out.status = resp.status;
        out.set_header("Access-Control-Allow-Origin", "*");
        if (!resp.etag.empty()) out.set_header("ETag", resp.etag);
        if (!resp.body.empty()) out.set_content(resp.body, "application/json");
    };
    svr.Get(".*", handler);
    svr.Post(".*", handler);
    svr.Options(".*", [](const httplib::Request&, httplib::Response& out) {
        out.status = 204;
        out.set_header("Access-Control-Allow-Origin", "*");
        out.set_header("Access-Control-Allow-Headers", "Content-Type, If-None-Match");
        out.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        out.set_header("Access-Control-Expose-Headers", "ETag");
    });
    if (!svr.bind_to_port(host, port)) {
        throw Error(ErrorCode::MalformedDocument, "cannot bind " + config_.bind);
    }
    advance(0);
    server_ = &svr;
    running_ = true;
    std::thread loop([this] {
        auto last = std::chrono::steady_clock::now();
        double carry = 0.0;
        while (running_) {
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
            const auto now = std::chrono::steady_clock::now();
            const double elapsed = std::chrono::duration<double>(now - last).count();
            last = now;
            if (paused_) continue;
            carry += elapsed * config_.speed;
            const auto dt = static_cast<Time>(std::floor(carry));
            if (dt > 0) {
                carry -= static_cast<double>(dt);
                advance(dt);
            }
        }
    });
    svr.listen_after_bind();
    running_ = false;
    loop.join();
    server_ = nullptr;
}

void Service::stop() {
    running_ = false;
    if (auto* s = server_.load()) s->stop();
}

}  // namespace ada
