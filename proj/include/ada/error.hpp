#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ada {

/// Integer seconds since the scenario epoch.
using Time = std::int64_t;

using Id = std::string;

enum class ErrorCode {
    DuplicateId,
    DanglingReference,
    NonPositiveLength,
    MalformedDocument,
    UnknownNode,
    UnknownSection,
    UnknownArea,
    UnknownTrain,
    NoFeasiblePath,
    EmptyChain,
    InfeasibleChain,
    InfeasibleProfile,
    InfeasibleInput,
    Infeasible,
    TimedOutNoIncumbent,
    CycleDetected,
    InvalidTransition,
    FeedbackAlreadySet,
    UnknownBoundaryNode,
    UnpartitionableNetwork,
    UnknownRecommendation,
    UnknownPreset,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace ada
