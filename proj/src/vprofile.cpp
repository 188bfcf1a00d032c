#include "ada/vprofile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ada {

namespace {

constexpr double kEps = 1e-9;

double accel_distance(double from, double to, double a) { return (to * to - from * from) / (2.0 * a); }

Time round_up(double seconds) { return static_cast<Time>(std::ceil(seconds - 1e-7)); }

double exact_time(const VProfile& p, double length, const Train& train) {
    const double d_acc = accel_distance(p.entry_speed, p.peak_speed, train.accel);
    const double d_dec = accel_distance(p.exit_speed, p.peak_speed, train.decel);
    const double cruise = std::max(0.0, length - d_acc - d_dec);
    return (p.peak_speed - p.entry_speed) / train.accel + cruise / p.peak_speed +
           (p.peak_speed - p.exit_speed) / train.decel;
}

}  // namespace

double effective_cap(const SectionChain& chain, const Train& train) { return std::min(train.v_max, chain.speed_limit); }

bool profile_fits(double length, double entry, double peak, double exit, const Train& train) {
    if (!(peak > 0.0) || entry > peak || exit > peak || entry < 0.0 || exit < 0.0) return false;
    const double needed = accel_distance(entry, peak, train.accel) + accel_distance(exit, peak, train.decel);
    return needed <= length * (1.0 + kEps) + kEps;
}

SpeedLevelSet make_level_set(const SectionChain& chain, const Train& train, std::span<const double> fractions) {
    const double cap = effective_cap(chain, train);
    std::vector<double> levels{0.0};
    for (double f : fractions) {
        const double v = cap * f;
        if (v > 0.0) levels.push_back(v);
    }
    levels.push_back(cap);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    const bool stop_fits = std::any_of(levels.begin() + 1, levels.end(), [&](double v) {
        return profile_fits(chain.length, 0.0, v, 0.0, train);
    });
    if (!stop_fits && chain.length > 0.0) {
        // Highest peak reachable from standstill that still allows stopping.
        const double ab = train.accel * train.decel;
        double creep = std::sqrt(2.0 * chain.length * ab / (train.accel + train.decel));
        creep = std::floor(creep * 10.0) / 10.0;
        if (creep <= 0.0) creep = std::sqrt(2.0 * chain.length * ab / (train.accel + train.decel)) * 0.5;
        levels.insert(std::upper_bound(levels.begin(), levels.end(), creep), creep);
    }
    return {levels};
}

double VProfile::time_at(double x, const Train& train) const {
    const double length = this->length();
    x = std::clamp(x, 0.0, length);
    const double d_acc = accel_distance(entry_speed, peak_speed, train.accel);
    const double d_dec = accel_distance(exit_speed, peak_speed, train.decel);
    const double d_cruise = std::max(0.0, length - d_acc - d_dec);
    const double t_acc = (peak_speed - entry_speed) / train.accel;
    if (x <= d_acc) {
        return (std::sqrt(entry_speed * entry_speed + 2.0 * train.accel * x) - entry_speed) / train.accel;
    }
    if (x <= d_acc + d_cruise) return t_acc + (x - d_acc) / peak_speed;
    const double into = x - d_acc - d_cruise;
    const double v = std::sqrt(std::max(0.0, peak_speed * peak_speed - 2.0 * train.decel * into));
    return t_acc + d_cruise / peak_speed + (peak_speed - v) / train.decel;
}

double VProfile::length() const {
    double total = 0.0;
    for (const auto& ph : phases) total += ph.distance;
    return total;
}

double VProfile::speed_at(double x, const Train& train) const {
    const double len = length();
    x = std::clamp(x, 0.0, len);
    const double up = std::sqrt(entry_speed * entry_speed + 2.0 * train.accel * x);
    const double down = std::sqrt(exit_speed * exit_speed + 2.0 * train.decel * (len - x));
    return std::min({up, peak_speed, down});
}

VProfile make_vprofile(const SectionChain& chain, const Train& train, double entry, double peak, double exit) {
    if (!(chain.length > 0.0)) throw Error(ErrorCode::InfeasibleProfile, "chain length must be positive");
    if (!profile_fits(chain.length, entry, peak, exit, train)) {
        throw Error(ErrorCode::InfeasibleProfile, "profile does not fit the chain");
    }
    VProfile p;
    p.entry_speed = entry;
    p.peak_speed = peak;
    p.exit_speed = exit;
    const double d_acc = accel_distance(entry, peak, train.accel);
    const double d_dec = accel_distance(exit, peak, train.decel);
    const double cruise = std::max(0.0, chain.length - d_acc - d_dec);
    // Rescale the ramps so the phases sum exactly to the chain length.
    const double ramps = d_acc + d_dec;
    const double scale = cruise == 0.0 && ramps > 0.0 ? chain.length / ramps : 1.0;
    if (d_acc > 0.0) p.phases.push_back({Phase::Kind::Accelerate, d_acc * scale});
    if (cruise > 0.0) p.phases.push_back({Phase::Kind::Cruise, cruise});
    if (d_dec > 0.0) p.phases.push_back({Phase::Kind::Decelerate, d_dec * scale});
    p.running_time = round_up(exact_time(p, chain.length, train));
    return p;
}

std::vector<VProfile> enumerate_vprofiles(const SectionChain& chain, const Train& train,
                                          const SpeedLevelSet& level_set) {
    if (chain.section_ids.empty() || !(chain.length > 0.0)) throw Error(ErrorCode::EmptyChain, "empty chain");
    const auto& levels = level_set.levels;
    std::vector<VProfile> out;
    for (double entry : levels) {
        for (double peak : levels) {
            if (!(peak > 0.0) || peak < entry) continue;
            for (double exit : levels) {
                if (exit > peak) continue;
                if (profile_fits(chain.length, entry, peak, exit, train)) {
                    out.push_back(make_vprofile(chain, train, entry, peak, exit));
                }
            }
        }
    }
    if (out.empty()) throw Error(ErrorCode::InfeasibleChain, "no velocity profile fits the chain");
    return out;
}

Time running_time(const VProfile& profile, const SectionChain& chain, const Train& train) {
    if (!(chain.length > 0.0)) throw Error(ErrorCode::InfeasibleProfile, "chain length must be positive");
    if (!profile_fits(chain.length, profile.entry_speed, profile.peak_speed, profile.exit_speed, train)) {
        throw Error(ErrorCode::InfeasibleProfile, "profile does not fit the chain");
    }
    return round_up(exact_time(profile, chain.length, train));
}

Time min_running_time(const SectionChain& chain, const Train& train, const SpeedLevelSet& level_set) {
    Time best = std::numeric_limits<Time>::max();
    for (const auto& p : enumerate_vprofiles(chain, train, level_set)) best = std::min(best, p.running_time);
    return best;
}

Time min_running_time(const SectionChain& chain, const Train& train) {
    return min_running_time(chain, train, make_level_set(chain, train));
}

}  // namespace ada
