#pragma once

#include <stdexcept>
#include <string>

namespace akpz {

// Error taxonomy, mirrored by the CLI exit codes: config/usage errors exit
// with 2, numerical failures (blowup, non-convergence) with 3.
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BlowupError : NumericalError {
    BlowupError(const std::string& what, double t, long step, double max_abs)
        : NumericalError(what), t(t), step(step), max_abs(max_abs) {}
    double t;
    long step;
    double max_abs;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ResolutionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace akpz
