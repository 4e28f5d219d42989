// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <type_traits>
#include <vector>

#include <Eigen/Core>

#include "fedlora/errors.hpp"
#include "fedlora/rng.hpp"

namespace fedlora {

// Random diagonal sketch over the LoRA inner dimension: (rank/k) * sum of
// e_j e_j^T over a k-subset of coordinates. Stored as the sorted index set
// plus the scale; never materialized densely outside test oracles.
class SketchMatrix {
 public:
  SketchMatrix(int rank, std::vector<int> active);

  static SketchMatrix identity(int rank);

  int rank() const { return rank_; }
  int active_count() const { return static_cast<int>(active_.size()); }
  const std::vector<int>& active_indices() const { return active_; }
  double scale() const { return static_cast<double>(rank_) / active_count(); }

  bool is_active(int j) const {
    return std::binary_search(active_.begin(), active_.end(), j);
  }

 private:
  int rank_;
  std::vector<int> active_;
};

// Uniform k-subset of {0, ..., rank-1}. Throws InvalidSketchRatio unless
// 1 <= k <= rank.
SketchMatrix sample_sketch(int rank, int k, Rng& rng);

// B * S * A without touching the inactive coordinates: contracts the k
// selected columns of B against the k selected rows of A, O(m k n) time.
template <typename DerivedB, typename DerivedA>
Eigen::Matrix<typename DerivedB::Scalar, Eigen::Dynamic, Eigen::Dynamic>
apply_sketch(const Eigen::MatrixBase<DerivedB>& b, const SketchMatrix& sketch,
             const Eigen::MatrixBase<DerivedA>& a) {
  static_assert(std::is_same_v<typename DerivedB::Scalar, typename DerivedA::Scalar>,
                "apply_sketch: mixed scalar types");
  if (b.cols() != sketch.rank() || a.rows() != sketch.rank()) {
    throw DimensionError("apply_sketch: factor inner dimensions must equal the sketch rank");
  }
  const auto& idx = sketch.active_indices();
  return sketch.scale() *
         (b.derived()(Eigen::all, idx) * a.derived()(idx, Eigen::all));
}

}  // namespace fedlora
