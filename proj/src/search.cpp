#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <queue>
#include <set>
#include <tuple>

#include "ada/optimizer.hpp"
#include "model_internal.hpp"

namespace ada {

using detail::OrderRef;
using detail::RestrictionRef;
using detail::SlotRef;
using detail::Times;

std::string to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::OptimalWithinGap: return "OptimalWithinGap";
        case SolveStatus::GapNotReached: return "GapNotReached";
        case SolveStatus::Infeasible: return "Infeasible";
        case SolveStatus::TimedOutNoIncumbent: return "TimedOutNoIncumbent";
    }
    return "?";
}

namespace {

constexpr double kEps = 1e-9;

struct Violation {
    enum class Kind { Pair, Forced, Closure } kind = Kind::Pair;
    Time amount = 0;
    SlotRef a;
    SlotRef b;
    std::size_t restriction = 0;
};

using OrderKey = std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>;

OrderKey order_key(const OrderRef& o) {
    if (std::tie(o.first.train, o.first.slot) < std::tie(o.second.train, o.second.slot)) {
        return {o.first.train, o.first.slot, o.second.train, o.second.slot};
    }
    return {o.second.train, o.second.slot, o.first.train, o.first.slot};
}

const ModelForcedOrder* forced_between(const Model& m, std::size_t i, std::size_t j, const Id& resource) {
    for (const auto& f : m.forced) {
        if (f.resource == resource && ((f.first == i && f.second == j) || (f.first == j && f.second == i))) return &f;
    }
    return nullptr;
}

/// All constraint violations of a combined schedule, skipping pairs and closures the
/// decisions already settle.
std::vector<Violation> violations(const Model& m, const std::vector<int>& modes, const std::vector<Times>& times,
                                  const std::vector<OrderRef>& orders, const std::vector<RestrictionRef>& restr) {
    std::vector<Violation> out;
    std::set<OrderKey> decided;
    for (const auto& o : orders) decided.insert(order_key(o));
    std::set<std::tuple<std::size_t, std::size_t, std::size_t>> settled;
    for (const auto& r : restr) settled.insert({r.train, r.slot, r.restriction});

    std::vector<std::vector<SlotRef>> users(m.resources.size());
    for (std::size_t i = 0; i < m.trains.size(); ++i) {
        const Mode& mode = detail::mode_of(m, i, modes[i]);
        for (std::size_t s = 0; s < mode.slots.size(); ++s) users[static_cast<std::size_t>(mode.slots[s].rid)].push_back({i, s});
    }
    auto slot = [&](SlotRef r) -> const OccupationSlot& { return detail::mode_of(m, r.train, modes[r.train]).slots[r.slot]; };

    for (const auto& list : users) {
        for (std::size_t x = 0; x < list.size(); ++x) {
            for (std::size_t y = x + 1; y < list.size(); ++y) {
                SlotRef a = list[x];
                SlotRef b = list[y];
                if (a.train == b.train) continue;
                const auto& sa = slot(a);
                const auto& sb = slot(b);
                if (!detail::competing(sa, sb)) continue;
                const Time lag = std::max(sa.lag, sb.lag);
                auto sep = [&](SlotRef p, const OccupationSlot& sp, SlotRef q, const OccupationSlot& sq) {
                    return detail::slot_entry(sq, times[q.train]) - detail::slot_exit(sp, times[p.train]) - lag;
                };
                if (const auto* f = forced_between(m, a.train, b.train, sa.resource)) {
                    if (f->first != a.train) {
                        std::swap(a, b);
                    }
                    const Time s = sep(a, slot(a), b, slot(b));
                    if (s < 0) out.push_back({Violation::Kind::Forced, -s, a, b, 0});
                    continue;
                }
                if (sa.fixed_entry || sb.fixed_entry) continue;
                if (decided.contains(order_key({a, b}))) continue;
                const Time ab = sep(a, sa, b, sb);
                const Time ba = sep(b, sb, a, sa);
                if (ab < 0 && ba < 0) out.push_back({Violation::Kind::Pair, std::min(-ab, -ba), a, b, 0});
            }
        }
    }
    for (std::size_t r = 0; r < m.restrictions.size(); ++r) {
        const auto& res = m.restrictions[r];
        for (std::size_t i = 0; i < m.trains.size(); ++i) {
            const Mode& mode = detail::mode_of(m, i, modes[i]);
            for (std::size_t s = 0; s < mode.slots.size(); ++s) {
                const auto& sl = mode.slots[s];
                if (sl.fixed_entry || sl.side >= 0 || sl.resource != res.section) continue;
                if (settled.contains({i, s, r})) continue;
                const Interval used{detail::slot_entry(sl, times[i]),
                                    detail::slot_exit(sl, times[i]) + m.config.release_margin};
                if (!used.overlaps(res.window)) continue;
                const Time overlap = std::min(used.end, res.window.end) - std::max(used.start, res.window.start);
                out.push_back({Violation::Kind::Closure, overlap, {i, s}, {i, s}, r});
            }
        }
    }
    return out;
}

double total_objective(const Model& m, const std::vector<int>& modes, const std::vector<Times>& times) {
    double sum = 0.0;
    for (std::size_t i = 0; i < m.trains.size(); ++i) {
        sum += detail::train_objective(m.trains[i], detail::mode_of(m, i, modes[i]), times[i]);
    }
    return sum;
}

struct Resolved {
    std::vector<int> modes;
    std::vector<OrderRef> orders;
    std::vector<RestrictionRef> restrictions;
};

Resolved resolve(const Model& m, const Decisions& d) {
    Resolved r;
    r.modes.assign(m.trains.size(), -1);
    for (const auto& [id, mode] : d.modes) {
        auto i = m.train_index(id);
        if (!i) throw Error(ErrorCode::UnknownTrain, id);
        if (mode >= m.trains[*i].modes.size()) throw Error(ErrorCode::InfeasibleInput, "mode out of range for " + id);
        r.modes[*i] = static_cast<int>(mode);
    }
    for (const auto& o : d.orders) {
        auto i = m.train_index(o.first);
        auto j = m.train_index(o.second);
        if (!i || !j || r.modes[*i] < 0 || r.modes[*j] < 0) continue;
        auto a = detail::find_slot(detail::mode_of(m, *i, r.modes[*i]), o.resource, false);
        auto b = detail::find_slot(detail::mode_of(m, *j, r.modes[*j]), o.resource, true);
        if (a && b) r.orders.push_back({{*i, *a}, {*j, *b}});
    }
    for (const auto& rd : d.restrictions) {
        auto i = m.train_index(rd.train);
        if (!i || r.modes[*i] < 0 || rd.restriction >= m.restrictions.size()) continue;
        auto s = detail::find_slot(detail::mode_of(m, *i, r.modes[*i]), m.restrictions[rd.restriction].section, true);
        if (s) r.restrictions.push_back({*i, *s, rd.restriction, rd.before});
    }
    return r;
}

std::vector<OrderDecision> realized_orders(const Model& m, const std::vector<int>& modes,
                                           const std::vector<Times>& times) {
    std::vector<OrderDecision> out;
    for (std::size_t i = 0; i < m.trains.size(); ++i) {
        const Mode& mi = detail::mode_of(m, i, modes[i]);
        for (std::size_t j = i + 1; j < m.trains.size(); ++j) {
            const Mode& mj = detail::mode_of(m, j, modes[j]);
            for (const auto& si : mi.slots) {
                for (const auto& sj : mj.slots) {
                    if (!detail::competing(si, sj) || (si.fixed_entry && sj.fixed_entry)) continue;
                    const auto ki = std::make_tuple(si.fixed_entry ? 0 : 1, detail::slot_entry(si, times[i]),
                                                    detail::slot_exit(si, times[i]), m.trains[i].id);
                    const auto kj = std::make_tuple(sj.fixed_entry ? 0 : 1, detail::slot_entry(sj, times[j]),
                                                    detail::slot_exit(sj, times[j]), m.trains[j].id);
                    if (ki < kj) {
                        out.push_back({m.trains[i].id, m.trains[j].id, si.resource});
                    } else {
                        out.push_back({m.trains[j].id, m.trains[i].id, si.resource});
                    }
                }
            }
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// Exact optimum of two trains on their own, resolving only their mutual conflicts.
/// A schedule of the whole model restricted to the pair is feasible here, so the value
/// bounds the pair's share of the objective from below. Free modes (-1) take the minimum.
class PairBounds {
public:
    explicit PairBounds(const Model& m) : m_(m), modes_(m.trains.size(), -1) {}

    double get(std::size_t i, int mi, std::size_t j, int mj) {
        if (i > j) {
            std::swap(i, j);
            std::swap(mi, mj);
        }
        const auto key = std::make_tuple(i, mi, j, mj);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        double best = std::numeric_limits<double>::infinity();
        if (mi >= 0 && mj >= 0) {
            best = exact(i, mi, j, mj);
        } else {
            // Modes are sorted by standalone objective, which bounds the pair optimum.
            const auto& ti = m_.trains[i];
            const auto& tj = m_.trains[j];
            const int ki0 = mi < 0 ? 0 : mi, ki1 = mi < 0 ? static_cast<int>(ti.modes.size()) : mi + 1;
            const int kj0 = mj < 0 ? 0 : mj, kj1 = mj < 0 ? static_cast<int>(tj.modes.size()) : mj + 1;
            for (int ki = ki0; ki < ki1; ++ki) {
                const double ci = ti.modes[static_cast<std::size_t>(ki)].standalone.objective;
                if (ci + tj.modes[static_cast<std::size_t>(kj0)].standalone.objective >= best - kEps) break;
                for (int kj = kj0; kj < kj1; ++kj) {
                    if (ci + tj.modes[static_cast<std::size_t>(kj)].standalone.objective >= best - kEps) break;
                    best = std::min(best, get(i, ki, j, kj));
                }
            }
        }
        cache_.emplace(key, best);
        return best;
    }

private:
    double exact(std::size_t i, int mi, std::size_t j, int mj) {
        modes_[i] = mi;
        modes_[j] = mj;
        i_ = i;
        j_ = j;
        best_ = std::numeric_limits<double>::infinity();
        std::vector<OrderRef> orders;
        dive(orders);
        modes_[i] = -1;
        modes_[j] = -1;
        return best_;
    }

    void dive(std::vector<OrderRef>& orders) {
        std::vector<Times> t;
        if (!detail::relax(m_, modes_, orders, {}, t)) return;
        const Mode& mi = detail::mode_of(m_, i_, modes_[i_]);
        const Mode& mj = detail::mode_of(m_, j_, modes_[j_]);
        const double cost = detail::train_objective(m_.trains[i_], mi, t[i_]) +
                            detail::train_objective(m_.trains[j_], mj, t[j_]);
        if (cost >= best_ - kEps) return;
        std::optional<OrderRef> worst;
        Time amount = 0;
        for (std::size_t a = 0; a < mi.slots.size(); ++a) {
            for (std::size_t b = 0; b < mj.slots.size(); ++b) {
                const auto& sa = mi.slots[a];
                const auto& sb = mj.slots[b];
                if (!detail::competing(sa, sb) || sa.fixed_entry || sb.fixed_entry) continue;
                if (forced_between(m_, i_, j_, sa.resource)) continue;
                const Time lag = std::max(sa.lag, sb.lag);
                const Time ab = detail::slot_entry(sb, t[j_]) - detail::slot_exit(sa, t[i_]) - lag;
                const Time ba = detail::slot_entry(sa, t[i_]) - detail::slot_exit(sb, t[j_]) - lag;
                if (ab >= 0 || ba >= 0) continue;
                if (const Time v = std::min(-ab, -ba); v > amount) {
                    amount = v;
                    worst = OrderRef{{i_, a}, {j_, b}};
                }
            }
        }
        if (!worst) {
            best_ = cost;
            return;
        }
        orders.push_back(*worst);
        dive(orders);
        orders.back() = {worst->second, worst->first};
        dive(orders);
        orders.pop_back();
    }

    const Model& m_;
    std::vector<int> modes_;
    std::size_t i_ = 0;
    std::size_t j_ = 0;
    double best_ = 0.0;
    std::map<std::tuple<std::size_t, int, std::size_t, int>, double> cache_;
};

struct SearchNode {
    std::vector<int> modes;
    std::vector<OrderRef> orders;
    std::vector<RestrictionRef> restrictions;
    double bound = 0.0;
    /// Bound in which every undecided train counts exactly its cheapest standalone cost.
    double additive = 0.0;
    std::size_t depth = 0;
    std::uint64_t seq = 0;
};

struct NodeOrder {
    bool operator()(const std::shared_ptr<SearchNode>& a, const std::shared_ptr<SearchNode>& b) const {
        // priority_queue puts the "largest" first: invert for smallest bound, deepest, oldest.
        return std::make_tuple(a->bound, -static_cast<long long>(a->depth), a->seq) >
               std::make_tuple(b->bound, -static_cast<long long>(b->depth), b->seq);
    }
};

struct Incumbent {
    double objective = std::numeric_limits<double>::infinity();
    std::vector<int> modes;
    std::vector<Times> times;
    bool set = false;
};

}  // namespace

double lower_bound(const Model& model, const Decisions& decisions) {
    auto r = resolve(model, decisions);
    std::vector<Times> times;
    if (!detail::relax(model, r.modes, r.orders, r.restrictions, times)) {
        throw Error(ErrorCode::CycleDetected, "fixed decisions contradict each other");
    }
    return total_objective(model, r.modes, times);
}

Evaluation evaluate_decisions(const Model& model, const Decisions& decisions) {
    auto r = resolve(model, decisions);
    for (std::size_t i = 0; i < r.modes.size(); ++i) {
        if (r.modes[i] < 0) r.modes[i] = 0;
    }
    r = resolve(model, [&] {
        Decisions d = decisions;
        for (std::size_t i = 0; i < r.modes.size(); ++i) d.modes[model.trains[i].id] = static_cast<std::size_t>(r.modes[i]);
        return d;
    }());
    Evaluation ev;
    std::vector<Times> times;
    if (!detail::relax(model, r.modes, r.orders, r.restrictions, times)) return ev;
    ev.feasible = true;
    ev.objective = total_objective(model, r.modes, times);
    ev.violations = violations(model, r.modes, times, r.orders, r.restrictions).size();
    for (std::size_t i = 0; i < model.trains.size(); ++i) {
        ev.trajectories.push_back(detail::trajectory_of(model.trains[i], detail::mode_of(model, i, r.modes[i]), times[i]));
    }
    return ev;
}

Solution solve(const Model& model, const HintSet& hints, const SolveParams& params) {
    if (!(params.gap_target > 0.0 && params.gap_target < 1.0) || !(params.time_limit > 0.0)) {
        throw Error(ErrorCode::InfeasibleInput, "solve parameters out of range");
    }
    using Clock = std::chrono::steady_clock;
    const auto started = Clock::now();
    const auto deadline = started + std::chrono::duration<double>(params.time_limit);
    auto elapsed_ms = [&] { return std::chrono::duration<double, std::milli>(Clock::now() - started).count(); };

    std::ofstream trace;
    if (!params.trace_path.empty()) trace.open(params.trace_path, std::ios::app);

    const std::size_t n = model.trains.size();

    // Hint preferences.
    std::vector<std::optional<std::size_t>> preferred_mode(n);
    std::set<std::tuple<Id, Id, Id>> preferred_orders;
    for (const auto& o : hints.fixed_orders) preferred_orders.insert({o.first, o.second, o.resource});
    for (std::size_t i = 0; i < n; ++i) {
        const auto& t = model.trains[i];
        auto it = hints.suggested_profiles.find(t.id);
        if (it == hints.suggested_profiles.end()) continue;
        const auto& h = it->second;
        if (h.choice) {
            preferred_mode[i] = match_mode(t, *h.choice);
        } else if (h.first_chain_levels) {
            for (std::size_t k = 0; k < t.modes.size(); ++k) {
                if (describe_mode(t, k).first_chain_levels == *h.first_chain_levels) {
                    preferred_mode[i] = k;
                    break;
                }
            }
        }
    }

    Solution sol;
    sol.area_id = model.area_id;
    sol.taken_at = model.taken_at;
    Incumbent inc;
    std::size_t nodes = 0;

    auto accept = [&](double objective, const std::vector<int>& modes, const std::vector<Times>& times) {
        if (inc.set && objective >= inc.objective - kEps) return;
        inc.objective = objective;
        inc.modes = modes;
        inc.times = times;
        inc.set = true;
        if (!sol.first_incumbent_node) sol.first_incumbent_node = nodes;
    };

    if (hints.warm_incumbent) {
        const Solution& warm = *hints.warm_incumbent;
        Decisions d;
        for (std::size_t i = 0; i < n; ++i) {
            auto c = warm.choices.find(model.trains[i].id);
            std::optional<std::size_t> k = c != warm.choices.end() ? match_mode(model.trains[i], c->second) : std::nullopt;
            d.modes[model.trains[i].id] = k.value_or(0);
            if (k) preferred_mode[i] = preferred_mode[i].value_or(*k);
        }
        d.orders = warm.orders;
        for (const auto& o : warm.orders) preferred_orders.insert({o.first, o.second, o.resource});
        auto r = resolve(model, d);
        std::vector<Times> times;
        if (detail::relax(model, r.modes, r.orders, r.restrictions, times) &&
            violations(model, r.modes, times, r.orders, r.restrictions).empty()) {
            accept(total_objective(model, r.modes, times), r.modes, times);
        }
    }

    std::priority_queue<std::shared_ptr<SearchNode>, std::vector<std::shared_ptr<SearchNode>>, NodeOrder> open;
    std::uint64_t seq = 0;
    double gap_pruned_min = std::numeric_limits<double>::infinity();
    bool limited = false;

    auto root = std::make_shared<SearchNode>();
    root->modes.assign(n, -1);
    for (std::size_t i = 0; i < n; ++i) root->additive += model.trains[i].modes.front().standalone.objective;
    root->bound = root->additive;
    root->seq = seq++;
    open.push(root);

    // Standalone costs plus the interaction of disjoint conflicting pairs, chosen greedily.
    PairBounds pairs(model);
    auto pair_bound = [&](const SearchNode& nd, const std::vector<Violation>& vs) {
        auto single = [&](std::size_t i) {
            const auto& tr = model.trains[i];
            return nd.modes[i] < 0 ? tr.modes.front().standalone.objective
                                   : tr.modes[static_cast<std::size_t>(nd.modes[i])].standalone.objective;
        };
        std::vector<std::tuple<double, std::size_t, std::size_t>> gains;
        std::set<std::pair<std::size_t, std::size_t>> seen;
        for (const auto& v : vs) {
            if (v.kind != Violation::Kind::Pair) continue;
            const auto p = std::minmax(v.a.train, v.b.train);
            if (!seen.insert(p).second) continue;
            const double g = pairs.get(p.first, nd.modes[p.first], p.second, nd.modes[p.second]) - single(p.first) -
                             single(p.second);
            if (g > kEps) gains.emplace_back(g, p.first, p.second);
        }
        std::sort(gains.begin(), gains.end(), std::greater<>());
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += single(i);
        std::vector<char> used(n, 0);
        for (const auto& [g, i, j] : gains) {
            if (used[i] || used[j]) continue;
            used[i] = used[j] = 1;
            total += g;
        }
        return total;
    };

    auto gap_of = [&](double lb) { return (inc.objective - lb) / std::max(inc.objective, 1.0); };
    auto out_of_budget = [&] {
        if (params.node_limit && nodes >= *params.node_limit) return true;
        return (nodes & 15) == 0 && Clock::now() >= deadline;
    };

    while (!open.empty()) {
        if (out_of_budget()) {
            limited = true;
            break;
        }
        if (inc.set && params.stop_at_first_incumbent) break;
        auto node = open.top();
        if (inc.set && node->bound >= inc.objective - kEps) break;  // every open node is dominated
        if (inc.set && gap_of(node->bound) <= params.gap_target) break;
        open.pop();

        // Plunge from this node towards a leaf, queueing the siblings.
        while (node) {
            if (out_of_budget()) {
                open.push(node);
                limited = true;
                break;
            }
            ++nodes;
            std::vector<Times> times;
            const bool feasible = detail::relax(model, node->modes, node->orders, node->restrictions, times);
            const double relaxed =
                feasible ? total_objective(model, node->modes, times) : std::numeric_limits<double>::infinity();
            const double additive = std::max(relaxed, node->additive);
            double bound = std::max(additive, node->bound);
            if (trace.is_open()) {
                nlohmann::json line{{"node", nodes},
                                    {"bound", feasible ? nlohmann::json(bound) : nlohmann::json(nullptr)},
                                    {"incumbent", inc.set ? nlohmann::json(inc.objective) : nlohmann::json(nullptr)},
                                    {"time_ms", elapsed_ms()}};
                trace << line.dump() << '\n';
            }
            if (!feasible) break;
            if (inc.set && bound >= inc.objective - kEps) break;
            if (inc.set && gap_of(bound) <= params.gap_target) {
                gap_pruned_min = std::min(gap_pruned_min, bound);
                break;
            }
            auto vs = violations(model, node->modes, times, node->orders, node->restrictions);
            if (vs.empty()) {
                accept(relaxed, node->modes, times);
                break;
            }
            bound = std::max(bound, pair_bound(*node, vs));
            if (inc.set && bound >= inc.objective - kEps) break;
            if (inc.set && gap_of(bound) <= params.gap_target) {
                gap_pruned_min = std::min(gap_pruned_min, bound);
                break;
            }
            // Settle conflicts among trains with fixed modes before opening new mode alternatives.
            auto open_modes = [&](const Violation& x) {
                return (node->modes[x.a.train] < 0 ? 1 : 0) + (node->modes[x.b.train] < 0 ? 1 : 0);
            };
            auto worst = std::min_element(vs.begin(), vs.end(), [&](const Violation& x, const Violation& y) {
                if (open_modes(x) != open_modes(y)) return open_modes(x) < open_modes(y);
                return std::make_tuple(-x.amount, model.trains[x.a.train].id, model.trains[x.b.train].id,
                                       model.resources[static_cast<std::size_t>(
                                           detail::mode_of(model, x.a.train, node->modes[x.a.train]).slots[x.a.slot].rid)]) <
                       std::make_tuple(-y.amount, model.trains[y.a.train].id, model.trains[y.b.train].id,
                                       model.resources[static_cast<std::size_t>(
                                           detail::mode_of(model, y.a.train, node->modes[y.a.train]).slots[y.a.slot].rid)]);
            });
            const Violation v = *worst;

            struct Child {
                std::shared_ptr<SearchNode> node;
                std::tuple<int, double, double, std::size_t> key;
            };
            std::vector<Child> children;
            auto make_child = [&] {
                auto c = std::make_shared<SearchNode>(*node);
                c->bound = bound;
                c->additive = additive;
                c->depth = node->depth + 1;
                c->seq = seq++;
                return c;
            };

            std::optional<std::size_t> branch_train;
            if (node->modes[v.a.train] < 0) branch_train = v.a.train;
            if (node->modes[v.b.train] < 0 && (!branch_train || model.trains[v.b.train].id < model.trains[*branch_train].id)) {
                branch_train = v.b.train;
            }
            if (branch_train) {
                const std::size_t t = *branch_train;
                const auto& tr = model.trains[t];
                const double base = additive - tr.modes.front().standalone.objective;
                for (std::size_t k = 0; k < tr.modes.size(); ++k) {
                    auto c = make_child();
                    c->modes[t] = static_cast<int>(k);
                    c->additive = base + tr.modes[k].standalone.objective;
                    c->bound = std::max(bound, c->additive);
                    const int hinted = preferred_mode[t] && *preferred_mode[t] == k ? 0 : 1;
                    children.push_back({c, {hinted, c->bound, 0.0, k}});
                }
            } else if (v.kind == Violation::Kind::Closure) {
                auto c = make_child();
                c->restrictions.push_back({v.a.train, v.a.slot, v.restriction, false});
                children.push_back({c, {0, bound, 0.0, 0}});
            } else {
                for (int side = 0; side < 2; ++side) {
                    const SlotRef first = side == 0 ? v.a : v.b;
                    const SlotRef second = side == 0 ? v.b : v.a;
                    const auto& sf = detail::mode_of(model, first.train, node->modes[first.train]).slots[first.slot];
                    const auto& ss = detail::mode_of(model, second.train, node->modes[second.train]).slots[second.slot];
                    const Time shift = detail::slot_exit(sf, times[first.train]) + std::max(sf.lag, ss.lag) -
                                       detail::slot_entry(ss, times[second.train]);
                    auto c = make_child();
                    c->orders.push_back({first, second});
                    const int hinted = preferred_orders.contains(
                                           {model.trains[first.train].id, model.trains[second.train].id, sf.resource})
                                           ? 0
                                           : 1;
                    children.push_back(
                        {c, {hinted, bound, static_cast<double>(shift) * model.trains[second.train].weight,
                             static_cast<std::size_t>(side)}});
                }
            }
            std::stable_sort(children.begin(), children.end(),
                             [](const Child& x, const Child& y) { return x.key < y.key; });
            std::shared_ptr<SearchNode> next;
            for (auto& c : children) {
                if (inc.set && c.node->bound >= inc.objective - kEps) continue;
                if (!next) {
                    next = c.node;
                } else {
                    open.push(c.node);
                }
            }
            node = next;
        }
        if (limited) break;
    }

    sol.nodes = nodes;
    sol.elapsed_ms = elapsed_ms();
    if (!inc.set) {
        sol.status = limited ? SolveStatus::TimedOutNoIncumbent : SolveStatus::Infeasible;
        sol.objective = 0.0;
        sol.lower_bound = open.empty() ? 0.0 : open.top()->bound;
        return sol;
    }
    double lb = std::min(inc.objective, gap_pruned_min);
    if (!open.empty()) lb = std::min(lb, open.top()->bound);
    sol.objective = inc.objective;
    sol.lower_bound = lb;
    sol.gap = std::max(0.0, gap_of(lb));
    sol.status = sol.gap <= params.gap_target + kEps ? SolveStatus::OptimalWithinGap : SolveStatus::GapNotReached;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& tr = model.trains[i];
        const int k = inc.modes[i] < 0 ? 0 : inc.modes[i];
        sol.trajectories.push_back(detail::trajectory_of(tr, tr.modes[static_cast<std::size_t>(k)], inc.times[i]));
        sol.choices[tr.id] = describe_mode(tr, static_cast<std::size_t>(k));
    }
    sol.orders = realized_orders(model, inc.modes, inc.times);
    return sol;
}

double objective(const Solution& solution, const Snapshot& snapshot) {
    double total = 0.0;
    for (const auto& t : solution.trajectories) {
        const auto* s = snapshot.find_train(t.train_id);
        const double w = s != nullptr ? s->train.priority_weight : 1.0;
        for (const auto& stop : t.stops) {
            if (stop.scheduled.is_customer_stop) total += w * static_cast<double>(stop.delay());
        }
    }
    return total;
}

nlohmann::json to_json(const Solution& s) {
    nlohmann::json trains = nlohmann::json::array();
    for (const auto& t : s.trajectories) {
        nlohmann::json passages = nlohmann::json::array();
        for (const auto& p : t.passages) {
            passages.push_back({{"node", p.node}, {"arrive", p.arrive}, {"depart", p.depart}});
        }
        const auto& c = s.choices.at(t.train_id);
        trains.push_back({{"train_id", t.train_id},
                          {"route_id", c.route_id},
                          {"stop_nodes", c.stop_nodes},
                          {"reduced", c.reduced},
                          {"passages", passages}});
    }
    nlohmann::json orders = nlohmann::json::array();
    for (const auto& o : s.orders) orders.push_back({{"first", o.first}, {"second", o.second}, {"resource", o.resource}});
    return {{"area_id", s.area_id},
            {"taken_at", s.taken_at},
            {"objective", s.objective},
            {"lower_bound", s.lower_bound},
            {"gap", s.gap},
            {"status", to_string(s.status)},
            {"nodes", s.nodes},
            {"elapsed_ms", s.elapsed_ms},
            {"trains", trains},
            {"orders", orders}};
}

}  // namespace ada
