#pragma once

#include <stdexcept>
#include <string>

namespace agenet {

/// Bad user-supplied configuration (grids, key/value files, parameter ranges).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A model object violates a structural requirement (negative sample,
/// non-monotone custom rate, invalid family parameters).
struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Runtime failure of a simulation or solve (event-cap hit, no convergence).
struct SimulationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace agenet
