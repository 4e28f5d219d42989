// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace fedlora {

// Matrix or vector shapes do not line up.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Sketch ratio k outside [1, rank].
struct InvalidSketchRatio : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct EmptyBatchError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct EmptyDatasetError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Deltas do not match the participation draw (missing or extra clients).
struct ProtocolViolation : std::logic_error {
  using std::logic_error::logic_error;
};

// Probe observation matrix is rank deficient; no usable null direction.
struct DegenerateProbes : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Null direction exists but has non-positive components, so the probes are
// incompatible with the convergence model.
struct InconsistentObservations : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A constraint makes every plan infeasible; `client` is the offending index
// when one can be named, -1 otherwise.
struct PlanInfeasible : std::runtime_error {
  explicit PlanInfeasible(const std::string& what, int client_idx = -1)
      : std::runtime_error(what), client(client_idx) {}
  int client;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace fedlora
