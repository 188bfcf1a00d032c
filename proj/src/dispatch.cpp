#include <algorithm>
#include <fstream>
#include <set>

#include "ada/dispatch.hpp"

namespace ada {

using nlohmann::json;

namespace {

const Trajectory* find_trajectory(const std::vector<Trajectory>& ts, const Id& train) {
    auto it = std::find_if(ts.begin(), ts.end(), [&](const Trajectory& t) { return t.train_id == train; });
    return it == ts.end() ? nullptr : &*it;
}

/// True once the train has left `resource` behind (section resources only).
bool passed(const WorldState& world, const Id& train, const Id& resource) {
    auto it = world.states.find(train);
    if (it == world.states.end()) return false;
    const auto& s = it->second;
    if (s.finished) return true;
    if (!s.last_report || resource.find('|') != Id::npos) return false;
    const auto& secs = s.path.sections;
    auto sec = std::find(secs.begin(), secs.end(), resource);
    return sec != secs.end() && static_cast<std::size_t>(sec - secs.begin()) + 1 <= s.path_pos;
}

}  // namespace

const Trajectory* TracedPlan::trajectory(const Id& train) const { return find_trajectory(trajectories, train); }
const Trajectory* Baseline::trajectory(const Id& train) const { return find_trajectory(trajectories, train); }

TracedPlan trace(const Solution& solution, const WorldState& world, const Network& network,
                 const ObservationArea& area, const TimingConfig& config) {
    TracedPlan out;
    out.area_id = area.id;
    out.traced_at = world.clock;
    try {
        const Snapshot snap = build_snapshot(world, network, area, area.horizon, config);
        const Model model = build_model(snap, network, config);
        Decisions d;
        for (const auto& t : model.trains) {
            auto c = solution.choices.find(t.id);
            if (c == solution.choices.end()) continue;
            if (auto k = match_mode(t, c->second)) d.modes[t.id] = *k;
        }
        for (const auto& o : solution.orders) {
            if (!model.train_index(o.first) || !model.train_index(o.second)) continue;
            if (passed(world, o.second, o.resource) && !passed(world, o.first, o.resource)) {
                out.unrealizable.push_back(o);
                continue;
            }
            d.orders.push_back(o);
        }
        const Evaluation ev = evaluate_decisions(model, d);
        out.feasible = ev.feasible;
        out.trajectories = ev.trajectories;
        out.objective = ev.objective;
        out.orders = d.orders;
        for (std::size_t i = 0; i < model.trains.size(); ++i) {
            const auto& t = model.trains[i];
            auto k = d.modes.find(t.id);
            out.choices[t.id] = describe_mode(t, k == d.modes.end() ? 0 : k->second);
        }
    } catch (const Error&) {
        out.feasible = false;
    }
    return out;
}

Baseline make_baseline(const Snapshot& snapshot, const Network& network, const TimingConfig& config) {
    Baseline b;
    b.trajectories = prognosis(snapshot, network, config);
    std::map<Id, std::vector<std::pair<Time, Id>>> users;
    for (const auto& t : b.trajectories) {
        for (const auto& o : t.occupations) users[o.section].push_back({o.entry, t.train_id});
    }
    for (auto& [section, list] : users) {
        std::sort(list.begin(), list.end());
        for (std::size_t i = 0; i < list.size(); ++i) {
            for (std::size_t j = i + 1; j < list.size(); ++j) {
                if (list[i].second != list[j].second) b.orders.push_back({list[i].second, list[j].second, section});
            }
        }
    }
    std::sort(b.orders.begin(), b.orders.end());
    return b;
}

std::string to_string(RecommendationKind k) {
    switch (k) {
        case RecommendationKind::OrderChange: return "OrderChange";
        case RecommendationKind::TrackChange: return "TrackChange";
        case RecommendationKind::LineChange: return "LineChange";
    }
    return "?";
}

std::string to_string(RecommendationStatus s) {
    switch (s) {
        case RecommendationStatus::Pending: return "Pending";
        case RecommendationStatus::AcceptedByDispatcher: return "AcceptedByDispatcher";
        case RecommendationStatus::ForwardedToSetter: return "ForwardedToSetter";
        case RecommendationStatus::RealizedBySetter: return "RealizedBySetter";
        case RecommendationStatus::RejectedByDispatcher: return "RejectedByDispatcher";
        case RecommendationStatus::RejectedBySetter: return "RejectedBySetter";
        case RecommendationStatus::Expired: return "Expired";
    }
    return "?";
}

std::string to_string(Thumb t) { return t == Thumb::Up ? "up" : "down"; }

std::string to_string(RecommendationAction a) {
    switch (a) {
        case RecommendationAction::DispatcherAccept: return "dispatcher_accept";
        case RecommendationAction::DispatcherReject: return "dispatcher_reject";
        case RecommendationAction::SetterAccept: return "setter_accept";
        case RecommendationAction::SetterReject: return "setter_reject";
    }
    return "?";
}

RecommendationStatus status_from_string(const std::string& s) {
    for (auto st : {RecommendationStatus::Pending, RecommendationStatus::AcceptedByDispatcher,
                    RecommendationStatus::ForwardedToSetter, RecommendationStatus::RealizedBySetter,
                    RecommendationStatus::RejectedByDispatcher, RecommendationStatus::RejectedBySetter,
                    RecommendationStatus::Expired}) {
        if (to_string(st) == s) return st;
    }
    throw Error(ErrorCode::MalformedDocument, "unknown status '" + s + "'");
}

Thumb thumb_from_string(const std::string& s) {
    if (s == "up") return Thumb::Up;
    if (s == "down") return Thumb::Down;
    throw Error(ErrorCode::MalformedDocument, "feedback must be 'up' or 'down'");
}

bool is_terminal(RecommendationStatus s) {
    return s == RecommendationStatus::RealizedBySetter || s == RecommendationStatus::RejectedByDispatcher ||
           s == RecommendationStatus::RejectedBySetter || s == RecommendationStatus::Expired;
}

json to_json(const Recommendation& r) {
    json orders = json::array();
    for (const auto& o : r.orders) orders.push_back({{"first", o.first}, {"second", o.second}, {"section", o.section}});
    json j{{"id", r.id},
           {"area_id", r.area_id},
           {"kind", to_string(r.kind)},
           {"train_ids", r.train_ids},
           {"location", r.location},
           {"detail", r.detail},
           {"deadline", r.deadline},
           {"created_at", r.created_at},
           {"status", to_string(r.status)},
           {"feedback", r.feedback ? json(to_string(*r.feedback)) : json(nullptr)},
           {"orders", orders},
           {"route", r.route ? to_json(*r.route) : json(nullptr)}};
    return j;
}

Recommendation recommendation_from_json(const json& j) {
    try {
        Recommendation r;
        r.id = j.at("id").get<Id>();
        r.area_id = j.value("area_id", Id{});
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "OrderChange") {
            r.kind = RecommendationKind::OrderChange;
        } else if (kind == "TrackChange") {
            r.kind = RecommendationKind::TrackChange;
        } else if (kind == "LineChange") {
            r.kind = RecommendationKind::LineChange;
        } else {
            throw Error(ErrorCode::MalformedDocument, "unknown recommendation kind '" + kind + "'");
        }
        r.train_ids = j.at("train_ids").get<std::vector<Id>>();
        r.location = j.at("location").get<Id>();
        r.detail = j.value("detail", std::string{});
        r.deadline = j.at("deadline").get<Time>();
        r.created_at = j.at("created_at").get<Time>();
        r.status = status_from_string(j.value("status", std::string("Pending")));
        if (j.contains("feedback") && !j.at("feedback").is_null()) r.feedback = thumb_from_string(j.at("feedback"));
        for (const auto& o : j.value("orders", json::array())) {
            r.orders.push_back({o.at("first").get<Id>(), o.at("second").get<Id>(), o.at("section").get<Id>()});
        }
        if (j.contains("route") && !j.at("route").is_null()) {
            const auto& rt = j.at("route");
            r.route = SetRoute{rt.at("train_id").get<Id>(), rt.at("route_id").get<Id>(), rt.value("set_at", Time{0})};
        }
        return r;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedDocument, e.what());
    }
}

namespace {

Time entry_of(const Trajectory* t, const Id& section) {
    if (t == nullptr) return 0;
    const auto* o = t->occupation(section);
    return o != nullptr ? o->entry : 0;
}

std::string join(const std::vector<Id>& ids) {
    std::string s;
    for (const auto& id : ids) s += (s.empty() ? "" : "+") + id;
    return s;
}

void order_changes(const TracedPlan& traced, const Baseline& baseline, const Network& network,
                   const DeriveConfig& config, std::vector<Recommendation>& out) {
    const std::set<OrderDecision> base(baseline.orders.begin(), baseline.orders.end());
    std::map<std::pair<Id, Id>, std::vector<Id>> swapped;  // (held, overtaker) -> sections
    for (const auto& o : traced.orders) {
        if (o.resource.find('|') != Id::npos) continue;
        if (base.contains({o.second, o.first, o.resource})) swapped[{o.second, o.first}].push_back(o.resource);
    }
    for (const auto& [pair, sections] : swapped) {
        const auto& [held, overtaker] = pair;
        const auto* held_plan = traced.trajectory(held);
        const auto* held_base = baseline.trajectory(held);
        if (held_plan == nullptr) continue;
        // Decision point: the first swapped section along the held train's path.
        std::size_t k = held_plan->path.sections.size();
        for (const auto& s : sections) {
            auto it = std::find(held_plan->path.sections.begin(), held_plan->path.sections.end(), s);
            k = std::min(k, static_cast<std::size_t>(it - held_plan->path.sections.begin()));
        }
        if (k == held_plan->path.sections.size()) continue;
        const Id decision = held_plan->path.sections[k];
        Id location = decision;
        for (std::size_t j = k + 1; j-- > 0;) {
            if (const auto* st = network.station_of_section(held_plan->path.sections[j])) {
                location = st->id;
                break;
            }
        }
        Recommendation r;
        r.area_id = traced.area_id;
        r.kind = RecommendationKind::OrderChange;
        r.train_ids = {held, overtaker};
        r.location = location;
        r.detail = held + " overtaken by " + overtaker + " at " + location;
        r.deadline = entry_of(held_base, decision) - config.reaction_margin;
        for (const auto& s : sections) r.orders.push_back({overtaker, held, s});
        std::sort(r.orders.begin(), r.orders.end());
        out.push_back(std::move(r));
    }
}

void route_changes(const TracedPlan& traced, const Baseline& baseline, const Network& network, Time now,
                   const DeriveConfig& config, std::vector<Recommendation>& out) {
    for (const auto& t : traced.trajectories) {
        const auto* b = baseline.trajectory(t.train_id);
        if (b == nullptr || t.path.nodes.empty()) continue;
        const auto& bn = b->path.nodes;
        auto start = std::find(bn.begin(), bn.end(), t.path.nodes.front());
        if (start == bn.end()) continue;
        std::size_t j = static_cast<std::size_t>(start - bn.begin());
        std::size_t i = 0;
        while (i < t.path.sections.size() && j < b->path.sections.size()) {
            if (t.path.sections[i] == b->path.sections[j]) {
                ++i;
                ++j;
                continue;
            }
            // Diverges at node i / j; find where the planned path rejoins the baseline.
            std::optional<std::pair<std::size_t, std::size_t>> rejoin;
            for (std::size_t e = i + 1; e < t.path.nodes.size() && !rejoin; ++e) {
                for (std::size_t f = j + 1; f < bn.size(); ++f) {
                    if (bn[f] == t.path.nodes[e]) {
                        rejoin = {e, f};
                        break;
                    }
                }
            }
            if (!rejoin) break;
            const std::vector<Id> planned(t.path.sections.begin() + static_cast<std::ptrdiff_t>(i),
                                          t.path.sections.begin() + static_cast<std::ptrdiff_t>(rejoin->first));
            const std::vector<Id> usual(b->path.sections.begin() + static_cast<std::ptrdiff_t>(j),
                                        b->path.sections.begin() + static_cast<std::ptrdiff_t>(rejoin->second));
            const auto* sp = planned.size() == 1 ? network.station_of_section(planned.front()) : nullptr;
            const auto* su = usual.size() == 1 ? network.station_of_section(usual.front()) : nullptr;

            Recommendation r;
            r.area_id = traced.area_id;
            r.train_ids = {t.train_id};
            if (sp != nullptr && sp == su) {
                r.kind = RecommendationKind::TrackChange;
                r.location = sp->id;
                r.detail = t.train_id + " uses track " + planned.front() + " instead of " + usual.front() + " at " + sp->id;
            } else {
                r.kind = RecommendationKind::LineChange;
                r.location = planned.front();
                r.detail = t.train_id + " routed via " + join(planned) + " instead of " + join(usual);
            }
            r.deadline = entry_of(b, usual.front()) - config.reaction_margin;
            r.route = SetRoute{t.train_id, synthesized_route_id(planned), now};
            out.push_back(std::move(r));
            i = rejoin->first;
            j = rejoin->second;
        }
    }
}

}  // namespace

std::vector<Recommendation> derive_recommendations(const TracedPlan& traced, const Baseline& baseline,
                                                   const Network& network, Time now, const DeriveConfig& config) {
    std::vector<Recommendation> all;
    if (!traced.feasible) return all;
    order_changes(traced, baseline, network, config, all);
    route_changes(traced, baseline, network, now, config, all);
    std::vector<Recommendation> out;
    for (auto& r : all) {
        if (r.deadline <= now) continue;
        r.created_at = now;
        out.push_back(std::move(r));
    }
    std::sort(out.begin(), out.end(), [](const Recommendation& a, const Recommendation& b) {
        return std::tie(a.deadline, a.kind, a.train_ids, a.location) < std::tie(b.deadline, b.kind, b.train_ids, b.location);
    });
    return out;
}

Recommendation transition(const Recommendation& r, RecommendationAction action, Time now) {
    using S = RecommendationStatus;
    using A = RecommendationAction;
    auto invalid = [&](const std::string& why) {
        return Error(ErrorCode::InvalidTransition,
                     to_string(action) + " not allowed for " + r.id + " (" + to_string(r.status) + "): " + why);
    };
    if (is_terminal(r.status)) throw invalid("status is final");
    if (now > r.deadline) throw invalid("deadline passed");
    Recommendation next = r;
    switch (r.status) {
        case S::Pending:
            if (action == A::DispatcherAccept) {
                next.status = S::ForwardedToSetter;
            } else if (action == A::DispatcherReject) {
                next.status = S::RejectedByDispatcher;
            } else {
                throw invalid("awaiting the dispatcher");
            }
            break;
        case S::AcceptedByDispatcher:
        case S::ForwardedToSetter:
            if (action == A::SetterAccept) {
                next.status = S::RealizedBySetter;
            } else if (action == A::SetterReject) {
                next.status = S::RejectedBySetter;
            } else {
                throw invalid("awaiting the signal setter");
            }
            break;
        default: throw invalid("status is final");
    }
    return next;
}

RecommendationRegistry::RecommendationRegistry(std::string log_path) : log_path_(std::move(log_path)) {}

RecommendationRegistry::RecommendationRegistry(RecommendationRegistry&& other) noexcept {
    std::lock_guard lock(other.mu_);
    log_path_ = std::move(other.log_path_);
    recs_ = std::move(other.recs_);
    next_id_ = other.next_id_;
    version_ = other.version_;
}

RecommendationRegistry RecommendationRegistry::replay(const std::string& log_path) {
    RecommendationRegistry reg(log_path);
    std::ifstream in(log_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            reg.apply_event(json::parse(line));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::MalformedDocument, "event log line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return reg;
}

Recommendation RecommendationRegistry::apply_event(const json& rec) {
    std::lock_guard lock(mu_);
    const auto event = rec.at("event").get<std::string>();
    const auto id = rec.at("rec_id").get<Id>();
    const auto& payload = rec.value("payload", json::object());
    ++version_;
    if (event == "created") {
        recs_.push_back(recommendation_from_json(payload));
        if (id.rfind("rec-", 0) == 0) next_id_ = std::max<std::uint64_t>(next_id_, std::stoull(id.substr(4)) + 1);
        return recs_.back();
    }
    auto& r = find(id);
    if (event == "accepted") {
        r.status = RecommendationStatus::AcceptedByDispatcher;
    } else if (event == "forwarded") {
        r.status = RecommendationStatus::ForwardedToSetter;
    } else if (event == "rejected") {
        r.status = payload.value("by", std::string("dispatcher")) == "setter" ? RecommendationStatus::RejectedBySetter
                                                                             : RecommendationStatus::RejectedByDispatcher;
    } else if (event == "realized") {
        r.status = RecommendationStatus::RealizedBySetter;
    } else if (event == "expired") {
        r.status = RecommendationStatus::Expired;
    } else if (event == "feedback") {
        r.feedback = thumb_from_string(payload.at("thumb").get<std::string>());
    } else {
        throw Error(ErrorCode::MalformedDocument, "unknown event '" + event + "'");
    }
    return r;
}

void RecommendationRegistry::log(Time ts, const Id& id, const std::string& event, const json& payload) {
    ++version_;
    if (log_path_.empty()) return;
    std::ofstream out(log_path_, std::ios::app);
    out << json{{"ts", ts}, {"rec_id", id}, {"event", event}, {"payload", payload}}.dump() << '\n';
}

Recommendation& RecommendationRegistry::find(const Id& id) {
    auto it = std::find_if(recs_.begin(), recs_.end(), [&](const Recommendation& r) { return r.id == id; });
    if (it == recs_.end()) throw Error(ErrorCode::UnknownRecommendation, id);
    return *it;
}

std::vector<Recommendation> RecommendationRegistry::add(std::vector<Recommendation> candidates, Time now) {
    std::lock_guard lock(mu_);
    std::vector<Recommendation> created;
    auto key = [](const Recommendation& r) {
        auto ids = r.train_ids;
        std::sort(ids.begin(), ids.end());
        return std::make_tuple(r.area_id, r.kind, ids, r.location);
    };
    for (auto& c : candidates) {
        if (c.deadline <= now) continue;
        const auto k = key(c);
        const bool duplicate = std::any_of(recs_.begin(), recs_.end(), [&](const Recommendation& r) {
            return !is_terminal(r.status) && r.deadline >= now && key(r) == k;
        });
        if (duplicate) continue;
        c.id = "rec-" + std::to_string(next_id_++);
        c.status = RecommendationStatus::Pending;
        c.feedback.reset();
        c.created_at = now;
        recs_.push_back(c);
        log(now, c.id, "created", to_json(c));
        created.push_back(c);
    }
    return created;
}

Recommendation RecommendationRegistry::apply(const Id& id, RecommendationAction action, Time now) {
    std::lock_guard lock(mu_);
    auto& r = find(id);
    if (!is_terminal(r.status) && now > r.deadline) {
        r.status = RecommendationStatus::Expired;
        log(now, id, "expired", json::object());
    }
    Recommendation next = transition(r, action, now);
    switch (action) {
        case RecommendationAction::DispatcherAccept:
            log(now, id, "accepted", {{"by", "dispatcher"}});
            log(now, id, "forwarded", json::object());
            break;
        case RecommendationAction::DispatcherReject: log(now, id, "rejected", {{"by", "dispatcher"}}); break;
        case RecommendationAction::SetterAccept: log(now, id, "realized", json::object()); break;
        case RecommendationAction::SetterReject: log(now, id, "rejected", {{"by", "setter"}}); break;
    }
    r = next;
    return r;
}

Recommendation RecommendationRegistry::record_feedback(const Id& id, Thumb thumb, Time now) {
    std::lock_guard lock(mu_);
    auto& r = find(id);
    if (r.feedback) throw Error(ErrorCode::FeedbackAlreadySet, id);
    r.feedback = thumb;
    log(now, id, "feedback", {{"thumb", to_string(thumb)}});
    return r;
}

std::vector<Recommendation> RecommendationRegistry::expire(Time now) {
    std::lock_guard lock(mu_);
    std::vector<Recommendation> out;
    for (auto& r : recs_) {
        if (is_terminal(r.status) || now <= r.deadline) continue;
        r.status = RecommendationStatus::Expired;
        log(now, r.id, "expired", json::object());
        out.push_back(r);
    }
    return out;
}

Recommendation RecommendationRegistry::get(const Id& id) const {
    std::lock_guard lock(mu_);
    return const_cast<RecommendationRegistry*>(this)->find(id);
}

std::vector<Recommendation> RecommendationRegistry::list(const std::optional<Id>& area,
                                                         const std::optional<RecommendationStatus>& status) const {
    std::lock_guard lock(mu_);
    std::vector<Recommendation> out;
    for (const auto& r : recs_) {
        if (area && r.area_id != *area) continue;
        if (status && r.status != *status) continue;
        out.push_back(r);
    }
    return out;
}

std::uint64_t RecommendationRegistry::version() const {
    std::lock_guard lock(mu_);
    return version_;
}

}  // namespace ada
