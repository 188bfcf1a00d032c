#include "oracles.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <set>

namespace ada::testing {

double closed_form_time(double length, double u, double v, double w, double accel, double decel) {
    if (v <= 0.0) return 0.0;
    const double up = (v - u) / accel;
    const double down = (v - w) / decel;
    const double d_up = (v * v - u * u) / (2.0 * accel);
    const double d_down = (v * v - w * w) / (2.0 * decel);
    return up + down + (length - d_up - d_down) / v;
}

std::size_t count_simple_paths(const Network& network, const Id& from, const Id& to) {
    std::map<Id, std::vector<Id>> next;
    for (const auto& s : network.sections()) {
        next[s.from_node].push_back(s.to_node);
        if (s.bidirectional) next[s.to_node].push_back(s.from_node);
    }
    std::set<Id> on_path;
    std::function<std::size_t(const Id&)> dfs = [&](const Id& n) -> std::size_t {
        if (n == to) return 1;
        on_path.insert(n);
        std::size_t total = 0;
        for (const auto& m : next[n]) {
            if (!on_path.contains(m)) total += dfs(m);
        }
        on_path.erase(n);
        return total;
    };
    return dfs(from);
}

std::vector<Overlap> brute_force_overlaps(const std::vector<Trajectory>& trajectories, Time lag) {
    std::vector<Overlap> out;
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        for (std::size_t j = i + 1; j < trajectories.size(); ++j) {
            for (const auto& a : trajectories[i].occupations) {
                for (const auto& b : trajectories[j].occupations) {
                    if (a.section != b.section) continue;
                    if (a.entry < b.exit + lag && b.entry < a.exit + lag) {
                        out.push_back({trajectories[i].train_id, trajectories[j].train_id, a.section});
                    }
                }
            }
        }
    }
    return out;
}

namespace {

constexpr Time kUnset = std::numeric_limits<Time>::min() / 4;

struct Edge {
    int from;
    int to;
    Time weight;  // t[to] >= t[from] + weight
};

struct TrainGraph {
    int arrive0 = 0;  // node index of the first arrival
    std::size_t boundaries = 0;
    int A(std::size_t b) const { return arrive0 + 2 * static_cast<int>(b); }
    int D(std::size_t b) const { return arrive0 + 2 * static_cast<int>(b) + 1; }
};

/// Longest paths from node 0; false on a positive cycle.
bool longest_paths(int nodes, const std::vector<Edge>& edges, std::vector<Time>& t) {
    t.assign(static_cast<std::size_t>(nodes), kUnset);
    t[0] = 0;
    for (int round = 0; round <= nodes; ++round) {
        bool changed = false;
        for (const auto& e : edges) {
            const Time from = t[static_cast<std::size_t>(e.from)];
            if (from == kUnset) continue;
            Time& to = t[static_cast<std::size_t>(e.to)];
            if (from + e.weight > to) {
                to = from + e.weight;
                changed = true;
            }
        }
        if (!changed) return true;
    }
    return false;
}

void train_edges(const ModelTrain& tr, const Mode& mode, const TrainGraph& g, std::vector<Edge>& edges) {
    using Kind = timing::StartCondition::Kind;
    const auto& pt = tr.paths[mode.path];
    const auto& plan = pt.plans[mode.plan];
    const auto& st = tr.start;
    const std::size_t nb = pt.boundaries.size();
    const bool fixed_start = st.kind == Kind::Passing || st.kind == Kind::Departed;
    auto ge = [&](int a, int b, Time w) { edges.push_back({a, b, w}); };
    auto eq = [&](int a, int b, Time w) {
        ge(a, b, w);
        ge(b, a, -w);
    };
    if (st.kind == Kind::Free) {
        ge(0, g.A(0), std::max(st.time, st.not_before));
    } else {
        eq(0, g.A(0), st.time);
    }
    if (fixed_start) eq(0, g.D(0), st.time);
    if (st.kind == Kind::Standing) ge(0, g.D(0), st.not_before);
    for (std::size_t b = 0; b < nb; ++b) {
        const bool last = b + 1 == nb;
        if (!(b == 0 && fixed_start)) ge(g.A(b), g.D(b), last ? 0 : pt.boundaries[b].dwell);
        if (last || !plan.waitable[b]) ge(g.D(b), g.A(b), 0);
        if (!last) eq(g.D(b), g.A(b + 1), plan.run_time[b]);
    }
    for (const auto& s : pt.stops) {
        if (s.scheduled.is_customer_stop && !s.terminal) ge(0, g.D(s.boundary), s.scheduled.departure);
    }
}

double train_cost(const ModelTrain& tr, const Mode& mode, const TrainGraph& g, const std::vector<Time>& t) {
    double total = 0.0;
    for (const auto& s : tr.paths[mode.path].stops) {
        if (!s.scheduled.is_customer_stop) continue;
        const Time late = s.terminal ? t[static_cast<std::size_t>(g.A(s.boundary))] - s.scheduled.arrival
                                     : t[static_cast<std::size_t>(g.D(s.boundary))] - s.scheduled.departure;
        if (late > 0) total += tr.weight * static_cast<double>(late);
    }
    return total;
}

struct SlotPoint {
    int node = 0;  // 0 with offset = absolute time for fixed entries
    Time offset = 0;
};

SlotPoint entry_point(const OccupationSlot& s, const TrainGraph& g) {
    if (s.fixed_entry) return {0, *s.fixed_entry};
    return {g.D(s.entry_boundary), s.entry_offset};
}

SlotPoint exit_point(const OccupationSlot& s, const TrainGraph& g) {
    return {s.exit_is_arrival ? g.A(s.exit_boundary) : g.D(s.exit_boundary), s.exit_offset};
}

bool compete(const OccupationSlot& a, const OccupationSlot& b) {
    return a.resource == b.resource && (a.side < 0 || b.side < 0 || a.side != b.side);
}

struct Search {
    const Model& m;
    std::vector<std::size_t> modes;
    std::vector<TrainGraph> graphs;
    int nodes = 1;
    std::vector<Edge> base;
    OracleResult result;

    explicit Search(const Model& model) : m(model) {}

    void build() {
        graphs.assign(m.trains.size(), {});
        nodes = 1;
        base.clear();
        for (std::size_t i = 0; i < m.trains.size(); ++i) {
            const auto& mode = m.trains[i].modes[modes[i]];
            graphs[i].arrive0 = nodes;
            graphs[i].boundaries = m.trains[i].paths[mode.path].boundaries.size();
            nodes += 2 * static_cast<int>(graphs[i].boundaries);
            train_edges(m.trains[i], mode, graphs[i], base);
        }
    }

    double cost(const std::vector<Time>& t) const {
        double total = 0.0;
        for (std::size_t i = 0; i < m.trains.size(); ++i) {
            total += train_cost(m.trains[i], m.trains[i].modes[modes[i]], graphs[i], t);
        }
        return total;
    }

    Time at(const SlotPoint& p, const std::vector<Time>& t) const { return t[static_cast<std::size_t>(p.node)] + p.offset; }

    /// Branch on the first competing pair whose occupations come closer than the lag.
    void branch(std::vector<Edge>& edges) {
        std::vector<Time> t;
        if (!longest_paths(nodes, edges, t)) return;
        const double c = cost(t);
        if (result.feasible && c >= result.objective) return;
        for (std::size_t i = 0; i < m.trains.size(); ++i) {
            const auto& si = m.trains[i].modes[modes[i]].slots;
            for (std::size_t j = i + 1; j < m.trains.size(); ++j) {
                const auto& sj = m.trains[j].modes[modes[j]].slots;
                for (const auto& a : si) {
                    for (const auto& b : sj) {
                        if (!compete(a, b)) continue;
                        const Time lag = std::max(a.lag, b.lag);
                        const auto ea = entry_point(a, graphs[i]), xa = exit_point(a, graphs[i]);
                        const auto eb = entry_point(b, graphs[j]), xb = exit_point(b, graphs[j]);
                        if (at(xa, t) + lag <= at(eb, t) || at(xb, t) + lag <= at(ea, t)) continue;
                        edges.push_back({xa.node, eb.node, xa.offset + lag - eb.offset});
                        branch(edges);
                        edges.back() = {xb.node, ea.node, xb.offset + lag - ea.offset};
                        branch(edges);
                        edges.pop_back();
                        return;
                    }
                }
            }
        }
        ++result.schedules;
        result.feasible = true;
        result.objective = c;
    }
};

/// Objective of one train alone under a mode; a lower bound for any combination using it.
double standalone_cost(const ModelTrain& tr, std::size_t mode) {
    TrainGraph g;
    g.arrive0 = 1;
    g.boundaries = tr.paths[tr.modes[mode].path].boundaries.size();
    std::vector<Edge> edges;
    train_edges(tr, tr.modes[mode], g, edges);
    std::vector<Time> t;
    if (!longest_paths(1 + 2 * static_cast<int>(g.boundaries), edges, t)) return std::numeric_limits<double>::infinity();
    return train_cost(tr, tr.modes[mode], g, t);
}

}  // namespace

OracleResult exhaustive_optimum(const Model& model) {
    Search s(model);
    const std::size_t n = model.trains.size();
    std::vector<std::vector<std::pair<double, std::size_t>>> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < model.trains[i].modes.size(); ++k) {
            order[i].push_back({standalone_cost(model.trains[i], k), k});
        }
        std::sort(order[i].begin(), order[i].end());
    }
    s.modes.assign(n, 0);
    std::function<void(std::size_t, double)> pick = [&](std::size_t i, double bound) {
        if (i == n) {
            s.build();
            std::vector<Edge> edges = s.base;
            s.branch(edges);
            return;
        }
        for (const auto& [c, k] : order[i]) {
            if (c == std::numeric_limits<double>::infinity()) break;
            if (s.result.feasible && bound + c >= s.result.objective) break;
            s.modes[i] = k;
            pick(i + 1, bound + c);
        }
    };
    pick(0, 0.0);
    return s.result;
}

}  // namespace ada::testing
