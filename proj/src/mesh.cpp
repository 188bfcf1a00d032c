#include <algorithm>
#include <future>
#include <numeric>
#include <set>

#include "ada/dispatch.hpp"
#include "ada/mesh.hpp"

namespace ada {

std::vector<ObservationArea> section_network(const Network& network, const PartitionRules& rules) {
    std::set<Id> cuts;
    if (!rules.manual_boundaries.empty()) {
        for (const auto& n : rules.manual_boundaries) {
            if (network.find_node(n) == nullptr) throw Error(ErrorCode::UnknownNode, "boundary " + n);
            cuts.insert(n);
        }
    } else {
        const auto t = double_track_transitions(network);
        cuts.insert(t.begin(), t.end());
    }
    const auto sections = network.sections();
    if (cuts.empty() && rules.max_sections != 0 && sections.size() > rules.max_sections) {
        throw Error(ErrorCode::UnpartitionableNetwork,
                    "no boundary candidates and " + std::to_string(sections.size()) + " sections exceed the cap");
    }

    // Union sections that share a node which is not a cut.
    std::vector<std::size_t> parent(sections.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto root = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    std::map<Id, std::vector<std::size_t>> at_node;
    for (std::size_t i = 0; i < sections.size(); ++i) {
        at_node[sections[i].from_node].push_back(i);
        at_node[sections[i].to_node].push_back(i);
    }
    for (const auto& [node, list] : at_node) {
        if (cuts.contains(node)) continue;
        for (std::size_t k = 1; k < list.size(); ++k) parent[root(list[k])] = root(list[0]);
    }
    std::map<std::size_t, std::vector<Id>> groups;
    for (std::size_t i = 0; i < sections.size(); ++i) groups[root(i)].push_back(sections[i].id);
    std::vector<std::vector<Id>> parts;
    for (auto& [r, ids] : groups) {
        std::sort(ids.begin(), ids.end());
        parts.push_back(std::move(ids));
    }
    std::sort(parts.begin(), parts.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });

    std::vector<ObservationArea> areas;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        ObservationArea a;
        a.id = k < 26 ? std::string(1, static_cast<char>('A' + k)) : "A" + std::to_string(k);
        a.section_ids = parts[k];
        a.horizon = rules.horizon;
        a.gap_target = rules.gap_target;
        std::set<Id> nodes;
        for (const auto& s : a.section_ids) {
            nodes.insert(network.section(s).from_node);
            nodes.insert(network.section(s).to_node);
        }
        for (const auto& n : nodes) {
            if (cuts.contains(n)) a.boundary_nodes.push_back(n);
        }
        areas.push_back(std::move(a));
    }
    for (auto& a : areas) {
        for (const auto& n : a.boundary_nodes) {
            for (const auto& b : areas) {
                if (b.id != a.id && std::find(b.boundary_nodes.begin(), b.boundary_nodes.end(), n) != b.boundary_nodes.end()) {
                    a.downstream_neighbors[n].push_back(b.id);
                }
            }
        }
    }
    return areas;
}

const ObservationArea* area_of_section(const std::vector<ObservationArea>& areas, const Id& section) {
    for (const auto& a : areas) {
        if (a.has_section(section)) return &a;
    }
    return nullptr;
}

std::vector<BoundaryHandoff> publish_handoffs(const Solution& solution, const ObservationArea& area,
                                              const std::vector<ObservationArea>& areas, const WorldState& world,
                                              int round) {
    std::vector<BoundaryHandoff> out;
    for (const auto& t : solution.trajectories) {
        if (t.path.nodes.empty() || t.passages.empty()) continue;
        const Id& exit = t.path.nodes.back();
        if (!area.has_boundary(exit)) continue;
        auto st = world.states.find(t.train_id);
        if (st == world.states.end()) continue;
        // Next section of the full path beyond the exit node.
        const auto& full = st->second.path;
        const std::size_t from = st->second.last_report ? st->second.path_pos : 0;
        std::optional<Id> next;
        for (std::size_t i = from; i + 1 < full.nodes.size(); ++i) {
            if (full.nodes[i] == exit && full.sections[i] != t.path.sections.back()) {
                next = full.sections[i];
                break;
            }
        }
        if (!next) continue;
        const auto* to = area_of_section(areas, *next);
        if (to == nullptr || to->id == area.id) continue;
        const auto& p = t.passages.back();
        BoundaryHandoff h;
        h.train_id = t.train_id;
        h.entry_node = exit;
        h.earliest_entry = std::max(p.depart, solution.taken_at);
        h.entry_speed = p.speed_out;
        h.produced_round = round;
        h.from_area = area.id;
        h.to_area = to->id;
        out.push_back(std::move(h));
    }
    // Order of crossing per (node, neighbour).
    for (auto& h : out) {
        std::vector<std::pair<Time, Id>> seq;
        for (const auto& o : out) {
            if (o.entry_node == h.entry_node && o.to_area == h.to_area) seq.push_back({o.earliest_entry, o.train_id});
        }
        std::sort(seq.begin(), seq.end());
        for (const auto& [time, id] : seq) h.boundary_order_seq.push_back(id);
    }
    std::sort(out.begin(), out.end(), [](const BoundaryHandoff& a, const BoundaryHandoff& b) {
        return std::tie(a.to_area, a.entry_node, a.earliest_entry, a.train_id) <
               std::tie(b.to_area, b.entry_node, b.earliest_entry, b.train_id);
    });
    return out;
}

Snapshot apply_handoffs(Snapshot snapshot, const std::vector<BoundaryHandoff>& handoffs) {
    const auto area = snapshot.area.section_set();
    auto first_area_section = [&](const TrainSnapshotState& s, const Id& node) -> std::optional<Id> {
        const auto& p = s.remaining_path;
        for (std::size_t i = 0; i + 1 < p.nodes.size(); ++i) {
            if (p.nodes[i] == node && area.contains(p.sections[i])) return p.sections[i];
        }
        return std::nullopt;
    };
    for (const auto& h : handoffs) {
        if (!h.to_area.empty() && h.to_area != snapshot.area_id) continue;
        if (!snapshot.area.has_boundary(h.entry_node)) {
            throw Error(ErrorCode::UnknownBoundaryNode, h.entry_node + " is not a boundary of area " + snapshot.area_id);
        }
        const bool seen = std::any_of(snapshot.boundary_constraints.begin(), snapshot.boundary_constraints.end(),
                                      [&](const BoundaryHandoff& o) {
                                          return o.train_id == h.train_id && o.entry_node == h.entry_node &&
                                                 o.produced_round == h.produced_round;
                                      });
        if (seen) continue;  // idempotent re-delivery
        snapshot.boundary_constraints.push_back(h);
        for (std::size_t k = 0; k + 1 < h.boundary_order_seq.size(); ++k) {
            const auto* a = snapshot.find_train(h.boundary_order_seq[k]);
            const auto* b = snapshot.find_train(h.boundary_order_seq[k + 1]);
            if (a == nullptr || b == nullptr) continue;
            const auto sa = first_area_section(*a, h.entry_node);
            const auto sb = first_area_section(*b, h.entry_node);
            if (!sa || sa != sb) continue;
            ForcedOrder fo{a->train.id, b->train.id, *sa};
            if (std::find(snapshot.forced_orders.begin(), snapshot.forced_orders.end(), fo) == snapshot.forced_orders.end()) {
                snapshot.forced_orders.push_back(fo);
            }
        }
    }
    return snapshot;
}

AreaOutcome solve_area(const WorldState& world, const Network& network, const ObservationArea& area,
                       const std::vector<BoundaryHandoff>& incoming, const SolveParams& params, const HintSet& hints,
                       const TimingConfig& config) {
    AreaOutcome out;
    out.area_id = area.id;
    try {
        out.snapshot = apply_handoffs(build_snapshot(world, network, area, area.horizon, config), incoming);
        const Model model = build_model(out.snapshot, network, config);
        HintSet h = hints;
        const auto base = make_baseline(out.snapshot, network, config);
        h.fixed_orders.insert(h.fixed_orders.end(), base.orders.begin(), base.orders.end());
        out.solution = solve(model, h, params);
    } catch (const Error& e) {
        out.error = e.what();
        out.solution.reset();
    }
    return out;
}

bool same_handoffs(const std::vector<BoundaryHandoff>& a, const std::vector<BoundaryHandoff>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto x = a[i];
        auto y = b[i];
        x.produced_round = y.produced_round = 0;
        if (!(x == y)) return false;
    }
    return true;
}

RoundResult run_round(const std::vector<ObservationArea>& areas, const WorldState& world, const Network& network,
                      const std::vector<BoundaryHandoff>& previous, int round, const MeshConfig& config) {
    RoundResult rr;
    rr.round = round;
    auto work = [&](const ObservationArea& a) {
        std::vector<BoundaryHandoff> mine;
        for (const auto& h : previous) {
            if (h.to_area == a.id) mine.push_back(h);
        }
        return solve_area(world, network, a, mine, config.params, {}, config.timing);
    };
    if (config.parallel && areas.size() > 1) {
        std::vector<std::future<AreaOutcome>> jobs;
        for (const auto& a : areas) jobs.push_back(std::async(std::launch::async, work, std::cref(a)));
        for (auto& j : jobs) rr.areas.push_back(j.get());
    } else {
        for (const auto& a : areas) rr.areas.push_back(work(a));
    }
    for (std::size_t k = 0; k < areas.size(); ++k) {
        const auto& o = rr.areas[k];
        if (!o.solution || o.solution->trajectories.empty()) continue;
        auto hs = publish_handoffs(*o.solution, areas[k], areas, world, round);
        rr.handoffs.insert(rr.handoffs.end(), hs.begin(), hs.end());
    }
    std::sort(rr.handoffs.begin(), rr.handoffs.end(), [](const BoundaryHandoff& a, const BoundaryHandoff& b) {
        return std::tie(a.to_area, a.entry_node, a.earliest_entry, a.train_id) <
               std::tie(b.to_area, b.entry_node, b.earliest_entry, b.train_id);
    });
    return rr;
}

MeshResult run_to_fixed_point(const std::vector<ObservationArea>& areas, const WorldState& world,
                              const Network& network, const MeshConfig& config) {
    MeshResult res;
    std::vector<BoundaryHandoff> previous;
    for (int r = 1; r <= config.max_rounds; ++r) {
        auto rr = run_round(areas, world, network, previous, r, config);
        const bool stable = r > 1 && same_handoffs(rr.handoffs, previous);
        previous = rr.handoffs;
        res.rounds.push_back(std::move(rr));
        if (stable) {
            res.converged = true;
            res.fixed_point_round = r;
            break;
        }
    }
    return res;
}

}  // namespace ada
