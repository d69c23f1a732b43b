#pragma once

#include <stdexcept>
#include <string>

namespace plar {

/// Bad argument values: wrong sizes, non-finite inputs, empty ranges.
struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Data that is formally valid but unusable (e.g. zero-variance design).
struct DegenerateInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Too few observations for the requested statistic.
struct InsufficientData : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Ill-conditioned or singular linear systems.
struct NumericalDegeneracy : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Attempt to simulate an explosive autoregression.
struct StabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace plar
