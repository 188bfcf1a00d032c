#include <algorithm>
#include <cmath>
#include <set>

#include "ada/conflicts.hpp"
#include "ada/optimizer.hpp"

namespace ada {

namespace {

constexpr Time kNoLeader = 3600;

bool on_path(const Path& p, const Id& resource) {
    if (resource.find('|') != Id::npos) return true;  // excluded route pair
    return std::find(p.sections.begin(), p.sections.end(), resource) != p.sections.end();
}

/// Resource still ahead of the train on the route the previous plan gave it.
bool still_ahead(const Solution& previous, const TrainSnapshotState& s, const Id& resource) {
    if (resource.find('|') != Id::npos) return true;
    const auto* t = previous.trajectory(s.train.id);
    const Path& p = t != nullptr ? t->path : s.remaining_path;
    const auto sec = std::find(p.sections.begin(), p.sections.end(), resource);
    if (sec == p.sections.end()) return false;
    if (!s.last_report) return true;
    const auto node = std::find(p.nodes.begin(), p.nodes.end(), s.last_report->node_id);
    if (node == p.nodes.end()) return on_path(s.remaining_path, resource);
    return sec - p.sections.begin() + 1 > node - p.nodes.begin();
}

std::map<Id, SituationFeatures> features_of(const Snapshot& snapshot, const Network& network) {
    const auto predicted = prognosis(snapshot, network);
    const auto conflicts = detect_conflicts(predicted, network, {}, snapshot.active_restrictions);
    const auto area = snapshot.area.section_set();

    std::map<Id, SituationFeatures> out;
    for (const auto& t : predicted) {
        const auto* s = snapshot.find_train(t.train_id);
        SituationFeatures f;
        f.category = s->train.category;
        if (!t.stops.empty()) f.delay_bucket = static_cast<int>(t.stops.front().delay() / 60);
        for (const auto& c : conflicts) {
            if (c.kind == ConflictKind::TrackOccupancy &&
                std::find(c.train_ids.begin(), c.train_ids.end(), t.train_id) != c.train_ids.end()) {
                ++f.conflict_count;
            }
        }
        f.headway_to_leader = kNoLeader;
        const SectionOccupation* first = nullptr;
        for (const auto& occ : t.occupations) {
            if (area.empty() || area.contains(occ.section)) {
                first = &occ;
                break;
            }
        }
        if (first != nullptr) {
            for (const auto& other : predicted) {
                if (other.train_id == t.train_id) continue;
                const auto* o = other.occupation(first->section);
                if (o != nullptr && o->entry <= first->entry) {
                    f.headway_to_leader = std::min(f.headway_to_leader, first->entry - o->entry);
                }
            }
        }
        out[t.train_id] = f;
    }
    return out;
}

double distance(const SituationFeatures& a, const SituationFeatures& b) {
    return (a.category == b.category ? 0.0 : 10.0) + std::abs(a.delay_bucket - b.delay_bucket) +
           std::abs(a.conflict_count - b.conflict_count) +
           std::abs(static_cast<double>(a.headway_to_leader - b.headway_to_leader)) / 60.0;
}

}  // namespace

HintSet make_hints(const Solution& previous, const Snapshot& snapshot, const Network& network,
                   Time position_threshold) {
    (void)network;
    HintSet hints;
    for (const auto& o : previous.orders) {
        const auto* a = snapshot.find_train(o.first);
        const auto* b = snapshot.find_train(o.second);
        if (a == nullptr || b == nullptr) continue;
        if (!still_ahead(previous, *a, o.resource) || !still_ahead(previous, *b, o.resource)) continue;
        hints.fixed_orders.push_back(o);
    }
    for (const auto& [id, choice] : previous.choices) {
        const auto* s = snapshot.find_train(id);
        const auto* planned = previous.trajectory(id);
        if (s == nullptr || planned == nullptr) continue;
        Time deviation = 0;
        if (s->last_report) {
            const auto* p = planned->passage(s->last_report->node_id);
            if (p != nullptr) {
                const Time expected = s->last_report->kind == PassKind::Depart ? p->depart : p->arrive;
                deviation = std::abs(expected - s->last_report->time);
            } else if (s->last_report->time > previous.taken_at) {
                continue;  // moved somewhere the plan does not cover
            }
        }
        if (deviation < position_threshold) hints.suggested_profiles[id].choice = choice;
    }
    hints.warm_incumbent = std::make_shared<Solution>(previous);
    return hints;
}

SituationFeatures situation_features(const Snapshot& snapshot, const Network& network, const Id& train) {
    auto all = features_of(snapshot, network);
    auto it = all.find(train);
    if (it == all.end()) throw Error(ErrorCode::UnknownTrain, train);
    return it->second;
}

std::map<Id, std::vector<int>> predict_profiles(const Snapshot& snapshot, const Network& network,
                                                const std::vector<ProfileRecord>& history,
                                                const PredictorConfig& config) {
    std::map<Id, std::vector<int>> out;
    if (history.empty() || config.k == 0) return out;
    for (const auto& [id, f] : features_of(snapshot, network)) {
        std::vector<std::pair<double, std::size_t>> ranked;
        for (std::size_t i = 0; i < history.size(); ++i) ranked.push_back({distance(f, history[i].features), i});
        std::sort(ranked.begin(), ranked.end());
        ranked.resize(std::min(config.k, ranked.size()));
        // Majority vote; ties go to the label seen nearest.
        std::vector<std::pair<std::vector<int>, int>> votes;
        for (const auto& [d, i] : ranked) {
            const auto& label = history[i].first_chain_levels;
            auto v = std::find_if(votes.begin(), votes.end(), [&](const auto& x) { return x.first == label; });
            if (v == votes.end()) {
                votes.push_back({label, 1});
            } else {
                ++v->second;
            }
        }
        auto best = votes.begin();
        for (auto v = votes.begin(); v != votes.end(); ++v) {
            if (v->second > best->second) best = v;
        }
        out[id] = best->first;
    }
    return out;
}

std::vector<ProfileRecord> record_profiles(const Snapshot& snapshot, const Network& network, const Model& model,
                                           const Solution& solution) {
    (void)model;
    std::vector<ProfileRecord> out;
    const auto features = features_of(snapshot, network);
    for (const auto& [id, choice] : solution.choices) {
        auto f = features.find(id);
        if (f == features.end()) continue;
        out.push_back({f->second, choice.first_chain_levels});
    }
    return out;
}

}  // namespace ada
