#include "spt/error.hpp"

namespace spt {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::UnbalancedPanel: return "UnbalancedPanel";
        case ErrorCode::EmptyCell: return "EmptyCell";
        case ErrorCode::SingletonCell: return "SingletonCell";
        case ErrorCode::DegenerateShape: return "DegenerateShape";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::NonFiniteInput: return "NonFiniteInput";
        case ErrorCode::InfeasibleSystem: return "InfeasibleSystem";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::BootstrapDegenerate: return "BootstrapDegenerate";
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

Error Error::cell(ErrorCode code, int unit, int period) {
    Error e(code, "cell (" + std::to_string(unit) + ", " + std::to_string(period) + ")");
    e.unit_ = unit;
    e.period_ = period;
    return e;
}

}  // namespace spt
