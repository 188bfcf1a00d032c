#pragma once

#include <vector>

#include "ada/optimizer.hpp"

namespace ada::detail {

struct SlotRef {
    std::size_t train = 0;
    std::size_t slot = 0;
};

struct OrderRef {
    SlotRef first;
    SlotRef second;
};

struct RestrictionRef {
    std::size_t train = 0;
    std::size_t slot = 0;
    std::size_t restriction = 0;
    bool before = true;
};

struct Times {
    std::vector<Time> arrive;
    std::vector<Time> depart;
};

const Mode& mode_of(const Model& m, std::size_t train, int mode);

/// Earliest event times of the decided trains (mode >= 0) under their orders, restriction
/// sides and the model's forced orders. Undecided trains keep their standalone times.
/// Returns false on a positive cycle.
bool relax(const Model& m, const std::vector<int>& modes, const std::vector<OrderRef>& orders,
           const std::vector<RestrictionRef>& restrictions, std::vector<Times>& times);

Time slot_entry(const OccupationSlot& slot, const Times& t);
Time slot_exit(const OccupationSlot& slot, const Times& t);

/// True when `a` and `b` compete for the same resource.
bool competing(const OccupationSlot& a, const OccupationSlot& b);

double train_objective(const ModelTrain& train, const Mode& mode, const Times& t);

Trajectory trajectory_of(const ModelTrain& train, const Mode& mode, const Times& t);

std::optional<std::size_t> find_slot(const Mode& mode, const Id& resource, bool movable_only);

}  // namespace ada::detail
