#pragma once

#include <cstdint>
#include <random>

#include "ada/optimizer.hpp"
#include "ada/sim.hpp"

namespace ada::testing {

/// Two independent lines of two blocks, a two-platform station and two blocks.
/// Trains run in either direction when the lines are bidirectional.
struct SmallInstance {
    Scenario scenario;
    Snapshot snapshot;
    Model model;
};

/// Draws instances until the model has at most `max_trains` trains and at most
/// `max_disjunctions` train pairs competing for some resource.
SmallInstance random_instance(std::mt19937_64& rng, std::size_t max_trains = 4, std::size_t max_disjunctions = 3);

/// Whole-network area of a scenario.
ObservationArea whole_area(const Network& network, Time horizon = 3600);

}  // namespace ada::testing
