#pragma once

#include <span>
#include <vector>

#include "ada/error.hpp"
#include "ada/train.hpp"

namespace ada {

/// Signal-to-signal section chain; the speed limit is the lowest over its sections.
struct SectionChain {
    std::vector<Id> section_ids;
    double length = 0.0;
    double speed_limit = 0.0;
};

/// Discrete speeds a train may hold at chain boundaries or cruise at.
/// Strictly increasing, starts at 0.
struct SpeedLevelSet {
    std::vector<double> levels;
};

/// Fractions of the effective cap used for the default level set.
inline const std::vector<double> kDefaultSpeedFractions{0.6, 1.0};

double effective_cap(const SectionChain& chain, const Train& train);

/// {0} plus the given fractions of min(v_max, chain limit). When no stop-to-stop
/// profile fits under those levels, the highest speed that still allows starting
/// and stopping within the chain is added.
SpeedLevelSet make_level_set(const SectionChain& chain, const Train& train,
                             std::span<const double> fractions = kDefaultSpeedFractions);

struct Phase {
    enum class Kind { Accelerate, Cruise, Decelerate };
    Kind kind = Kind::Cruise;
    double distance = 0.0;
};

struct VProfile {
    double entry_speed = 0.0;
    double peak_speed = 0.0;
    double exit_speed = 0.0;
    std::vector<Phase> phases;
    Time running_time = 0;

    bool stop_capable() const { return entry_speed == 0.0 && exit_speed == 0.0; }

    /// Unrounded time at distance x from the chain start.
    double time_at(double x, const Train& train) const;

    /// Speed at distance x from the chain start.
    double speed_at(double x, const Train& train) const;

    double length() const;
};

/// True when the train can go entry -> peak -> exit within `length`.
bool profile_fits(double length, double entry, double peak, double exit, const Train& train);

/// All kinematically feasible (entry, peak, exit) triples, ordered lexicographically.
std::vector<VProfile> enumerate_vprofiles(const SectionChain& chain, const Train& train,
                                          const SpeedLevelSet& level_set);

/// Running time in whole seconds, rounded up.
Time running_time(const VProfile& profile, const SectionChain& chain, const Train& train);

Time min_running_time(const SectionChain& chain, const Train& train);
Time min_running_time(const SectionChain& chain, const Train& train, const SpeedLevelSet& level_set);

/// Builds the phase list for a triple; throws InfeasibleProfile when it does not fit.
VProfile make_vprofile(const SectionChain& chain, const Train& train, double entry, double peak, double exit);

}  // namespace ada
