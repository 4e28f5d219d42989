// SPDX-License-Identifier: Apache-2.0
#include "fedlora/plan.hpp"

#include <string>
#include <utility>

namespace fedlora {

Plan::Plan(Eigen::VectorXd sampling_probs, Eigen::VectorXi sketch_ratios, int rank)
    : probs_(std::move(sampling_probs)), ratios_(std::move(sketch_ratios)), rank_(rank) {
  if (probs_.size() == 0 || probs_.size() != ratios_.size()) {
    throw DimensionError("Plan: need matching, nonempty probability and ratio vectors");
  }
  if (rank_ < 1) throw InvalidSketchRatio("Plan: rank must be positive");
  for (Eigen::Index n = 0; n < probs_.size(); ++n) {
    if (!(probs_[n] > 0.0) || probs_[n] > 1.0) {
      throw DimensionError("Plan: sampling probability of client " + std::to_string(n) +
                           " must lie in (0, 1]");
    }
    if (ratios_[n] < 1 || ratios_[n] > rank_) {
      throw InvalidSketchRatio("Plan: sketch ratio of client " + std::to_string(n) +
                               " must lie in [1, rank]");
    }
  }
}

}  // namespace fedlora
