#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spt {

enum class ErrorCode {
    MissingColumn,
    UnbalancedPanel,
    EmptyCell,
    SingletonCell,
    DegenerateShape,
    LengthMismatch,
    NonFiniteInput,
    InfeasibleSystem,
    DimensionMismatch,
    BootstrapDegenerate,
    InvalidSpec,
    InvalidArgument,
    Io,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    // Cell-level failures carry 1-based (unit, period) indices after relabeling.
    static Error cell(ErrorCode code, int unit, int period);

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }
    [[nodiscard]] int unit() const noexcept { return unit_; }
    [[nodiscard]] int period() const noexcept { return period_; }

private:
    ErrorCode code_;
    int unit_ = -1;
    int period_ = -1;
};

}  // namespace spt
