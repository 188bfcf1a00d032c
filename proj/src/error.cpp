#include "ada/error.hpp"

namespace ada {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::DanglingReference: return "DanglingReference";
        case ErrorCode::NonPositiveLength: return "NonPositiveLength";
        case ErrorCode::MalformedDocument: return "MalformedDocument";
        case ErrorCode::UnknownNode: return "UnknownNode";
        case ErrorCode::UnknownSection: return "UnknownSection";
        case ErrorCode::UnknownArea: return "UnknownArea";
        case ErrorCode::UnknownTrain: return "UnknownTrain";
        case ErrorCode::NoFeasiblePath: return "NoFeasiblePath";
        case ErrorCode::EmptyChain: return "EmptyChain";
        case ErrorCode::InfeasibleChain: return "InfeasibleChain";
        case ErrorCode::InfeasibleProfile: return "InfeasibleProfile";
        case ErrorCode::InfeasibleInput: return "InfeasibleInput";
        case ErrorCode::Infeasible: return "Infeasible";
        case ErrorCode::TimedOutNoIncumbent: return "TimedOutNoIncumbent";
        case ErrorCode::CycleDetected: return "CycleDetected";
        case ErrorCode::InvalidTransition: return "InvalidTransition";
        case ErrorCode::FeedbackAlreadySet: return "FeedbackAlreadySet";
        case ErrorCode::UnknownBoundaryNode: return "UnknownBoundaryNode";
        case ErrorCode::UnpartitionableNetwork: return "UnpartitionableNetwork";
        case ErrorCode::UnknownRecommendation: return "UnknownRecommendation";
        case ErrorCode::UnknownPreset: return "UnknownPreset";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace ada
