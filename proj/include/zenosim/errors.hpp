#pragma once

#include <stdexcept>
#include <string>

namespace zenosim {

// Invalid physical quantity or out-of-range argument.
struct domain_error : std::domain_error {
  using std::domain_error::domain_error;
};

// Inconsistent protocol / sequence configuration.
struct config_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Non-finite values or failed numerical operation.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Adaptive integrator could not reach the requested tolerance.
struct divergence_error : numeric_error {
  using numeric_error::numeric_error;
};

// Degenerate readout calibration (zero contrast swing).
struct calibration_error : numeric_error {
  using numeric_error::numeric_error;
};

// Singular normal equations; message names the unidentifiable combination.
struct rank_deficiency_error : numeric_error {
  using numeric_error::numeric_error;
};

}  // namespace zenosim
