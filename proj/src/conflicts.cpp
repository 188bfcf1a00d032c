#include "ada/conflicts.hpp"

#include <algorithm>
#include <tuple>

namespace ada {

std::string to_string(ConflictKind kind) {
    switch (kind) {
        case ConflictKind::TrackOccupancy: return "TrackOccupancy";
        case ConflictKind::Schedule: return "Schedule";
        case ConflictKind::ClosedTrack: return "ClosedTrack";
    }
    return "?";
}

nlohmann::json to_json(const Conflict& c) {
    return {{"kind", to_string(c.kind)},
            {"train_ids", c.train_ids},
            {"location", c.location},
            {"window", {{"start", c.window.start}, {"end", c.window.end}}},
            {"severity", c.severity}};
}

namespace {

struct Span {
    std::size_t train;
    Id location;
    Interval window;
};

// Occupation of a declared route: from entering its first section to leaving its last.
std::optional<Interval> route_span(const Trajectory& t, const Route& route, Time release) {
    if (route.section_ids.empty()) return std::nullopt;
    auto it = std::search(t.path.sections.begin(), t.path.sections.end(), route.section_ids.begin(),
                          route.section_ids.end());
    if (it == t.path.sections.end()) return std::nullopt;
    const auto* first = t.occupation(route.section_ids.front());
    const auto* last = t.occupation(route.section_ids.back());
    if (first == nullptr || last == nullptr) return std::nullopt;
    return Interval{first->entry, last->exit + release};
}

void add_overlap(std::vector<Conflict>& out, const std::vector<Trajectory>& ts, const Span& a, const Span& b,
                 const Id& location) {
    if (a.train == b.train || !a.window.overlaps(b.window)) return;
    Conflict c;
    c.kind = ConflictKind::TrackOccupancy;
    c.train_ids = {ts[a.train].train_id, ts[b.train].train_id};
    std::sort(c.train_ids.begin(), c.train_ids.end());
    c.location = location;
    c.window = {std::max(a.window.start, b.window.start), std::min(a.window.end, b.window.end)};
    c.severity = c.window.end - c.window.start;
    out.push_back(std::move(c));
}

}  // namespace

std::vector<Conflict> detect_conflicts(const std::vector<Trajectory>& trajectories, const Network& network,
                                       const ConflictConfig& config,
                                       const std::vector<AvailabilityRestriction>& extra_restrictions) {
    std::vector<Conflict> out;

    std::map<Id, std::vector<Span>> by_section;
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        for (const auto& occ : trajectories[i].occupations) {
            by_section[occ.section].push_back({i, occ.section, {occ.entry, occ.exit + config.release_margin}});
        }
    }
    for (const auto& [section, spans] : by_section) {
        for (std::size_t x = 0; x < spans.size(); ++x) {
            for (std::size_t y = x + 1; y < spans.size(); ++y) add_overlap(out, trajectories, spans[x], spans[y], section);
        }
    }

    for (const auto& ex : network.exclusions()) {
        const Route* ra = network.find_route(ex.route_a);
        const Route* rb = network.find_route(ex.route_b);
        if (ra == nullptr || rb == nullptr) continue;
        for (std::size_t i = 0; i < trajectories.size(); ++i) {
            const auto sa = route_span(trajectories[i], *ra, config.release_margin);
            if (!sa) continue;
            for (std::size_t j = 0; j < trajectories.size(); ++j) {
                const auto sb = route_span(trajectories[j], *rb, config.release_margin);
                if (sb) add_overlap(out, trajectories, {i, ra->id, *sa}, {j, rb->id, *sb}, ra->section_ids.front());
            }
        }
    }

    std::vector<AvailabilityRestriction> restrictions(network.restrictions().begin(), network.restrictions().end());
    restrictions.insert(restrictions.end(), extra_restrictions.begin(), extra_restrictions.end());
    for (const auto& t : trajectories) {
        for (const auto& occ : t.occupations) {
            const Interval used{occ.entry, occ.exit + config.release_margin};
            for (const auto& r : restrictions) {
                if (r.section_id != occ.section || !used.overlaps(r.window)) continue;
                Conflict c;
                c.kind = ConflictKind::ClosedTrack;
                c.train_ids = {t.train_id};
                c.location = occ.section;
                c.window = {std::max(used.start, r.window.start), std::min(used.end, r.window.end)};
                c.severity = c.window.end - c.window.start;
                out.push_back(std::move(c));
            }
        }
        for (const auto& stop : t.stops) {
            if (!stop.scheduled.is_customer_stop) continue;
            const Time late = stop.delay();
            if (late <= config.schedule_threshold) continue;
            const Time planned = stop.terminal ? stop.scheduled.arrival : stop.scheduled.departure;
            Conflict c;
            c.kind = ConflictKind::Schedule;
            c.train_ids = {t.train_id};
            c.location = stop.scheduled.station_id;
            c.window = {planned, planned + late};
            c.severity = late;
            out.push_back(std::move(c));
        }
    }

    std::sort(out.begin(), out.end(), [](const Conflict& a, const Conflict& b) {
        return std::tie(a.window.start, a.kind, a.train_ids, a.location, a.window.end) <
               std::tie(b.window.start, b.kind, b.train_ids, b.location, b.window.end);
    });
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace ada
