#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ada/optimizer.hpp"
#include "ada/traffic.hpp"

namespace ada {

/// Solution decisions re-timed on the current world state.
struct TracedPlan {
    Id area_id;
    Time traced_at = 0;
    bool feasible = false;
    std::vector<Trajectory> trajectories;  // sorted by train id
    std::map<Id, ModeChoice> choices;
    std::vector<OrderDecision> orders;        // still realizable
    std::vector<OrderDecision> unrealizable;  // second train already passed the resource
    double objective = 0.0;

    const Trajectory* trajectory(const Id& train) const;
};

/// Keeps the modes and orders of `solution` and recomputes times from the current
/// positions in `world`. Never throws for stale decisions; they are flagged instead.
TracedPlan trace(const Solution& solution, const WorldState& world, const Network& network,
                 const ObservationArea& area, const TimingConfig& config = {});

/// What would happen without intervention: unimpeded prediction and its implied orders.
struct Baseline {
    std::vector<Trajectory> trajectories;
    std::vector<OrderDecision> orders;  // per shared section, every earlier/later pair

    const Trajectory* trajectory(const Id& train) const;
};

Baseline make_baseline(const Snapshot& snapshot, const Network& network, const TimingConfig& config = {});

enum class RecommendationKind { OrderChange, TrackChange, LineChange };
enum class RecommendationStatus {
    Pending,
    AcceptedByDispatcher,
    ForwardedToSetter,
    RealizedBySetter,
    RejectedByDispatcher,
    RejectedBySetter,
    Expired,
};
enum class Thumb { Up, Down };
enum class RecommendationAction { DispatcherAccept, DispatcherReject, SetterAccept, SetterReject };

std::string to_string(RecommendationKind k);
std::string to_string(RecommendationStatus s);
std::string to_string(Thumb t);
std::string to_string(RecommendationAction a);
RecommendationStatus status_from_string(const std::string& s);
Thumb thumb_from_string(const std::string& s);
bool is_terminal(RecommendationStatus s);

struct Recommendation {
    Id id;
    Id area_id;
    RecommendationKind kind = RecommendationKind::OrderChange;
    std::vector<Id> train_ids;
    Id location;
    std::string detail;
    Time deadline = 0;
    Time created_at = 0;
    RecommendationStatus status = RecommendationStatus::Pending;
    std::optional<Thumb> feedback;
    /// Effect on the world once realized.
    std::vector<ForcedOrder> orders;
    std::optional<SetRoute> route;

    bool operator==(const Recommendation&) const = default;
};

nlohmann::json to_json(const Recommendation& r);
Recommendation recommendation_from_json(const nlohmann::json& j);

struct DeriveConfig {
    Time reaction_margin = 60;
};

/// One candidate per decision of `traced` that differs from `baseline`. Ids are left
/// empty; candidates whose deadline is not after `now` are dropped.
std::vector<Recommendation> derive_recommendations(const TracedPlan& traced, const Baseline& baseline,
                                                   const Network& network, Time now,
                                                   const DeriveConfig& config = {});

/// Pure state-machine step. Dispatcher acceptance forwards to the setter at once.
/// Throws InvalidTransition for actions the current status does not allow or once
/// `now` is past the deadline.
Recommendation transition(const Recommendation& r, RecommendationAction action, Time now);

/// Serialized recommendation store with an append-only JSONL event log.
class RecommendationRegistry {
public:
    /// Empty `log_path` keeps no log.
    explicit RecommendationRegistry(std::string log_path = {});

    /// Rebuilds a registry from an event log; further events are appended to it.
    static RecommendationRegistry replay(const std::string& log_path);

    /// Applies one logged event without logging it again; returns the affected recommendation.
    Recommendation apply_event(const nlohmann::json& record);

    /// Assigns ids to new candidates, dropping duplicates of open recommendations
    /// (same kind, train set and location) and those already past their deadline.
    std::vector<Recommendation> add(std::vector<Recommendation> candidates, Time now);

    Recommendation apply(const Id& id, RecommendationAction action, Time now);
    Recommendation record_feedback(const Id& id, Thumb thumb, Time now);

    /// Expires open recommendations whose deadline lies before `now`.
    std::vector<Recommendation> expire(Time now);

    Recommendation get(const Id& id) const;
    std::vector<Recommendation> list(const std::optional<Id>& area = std::nullopt,
                                     const std::optional<RecommendationStatus>& status = std::nullopt) const;
    /// Bumped on every change.
    std::uint64_t version() const;

    RecommendationRegistry(RecommendationRegistry&& other) noexcept;
    RecommendationRegistry& operator=(RecommendationRegistry&&) = delete;

private:
    void log(Time ts, const Id& id, const std::string& event, const nlohmann::json& payload);
    Recommendation& find(const Id& id);

    mutable std::mutex mu_;
    std::string log_path_;
    std::vector<Recommendation> recs_;
    std::uint64_t next_id_ = 1;
    std::uint64_t version_ = 0;
};

}  // namespace ada
