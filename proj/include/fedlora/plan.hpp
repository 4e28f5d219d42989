// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include "fedlora/errors.hpp"

namespace fedlora {

// Per-client decision variables: sampling probability q_n in (0, 1] and
// sketch ratio k_n in [1, rank]. q_n = 0 is rejected outright; a client that
// should never participate does not belong in the roster.
class Plan {
 public:
  Plan(Eigen::VectorXd sampling_probs, Eigen::VectorXi sketch_ratios, int rank);

  const Eigen::VectorXd& sampling_probs() const { return probs_; }
  const Eigen::VectorXi& sketch_ratios() const { return ratios_; }
  int rank() const { return rank_; }
  int clients() const { return static_cast<int>(probs_.size()); }

 private:
  Eigen::VectorXd probs_;
  Eigen::VectorXi ratios_;
  int rank_;
};

}  // namespace fedlora
