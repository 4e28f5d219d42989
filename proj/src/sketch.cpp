// SPDX-License-Identifier: Apache-2.0
#include "fedlora/sketch.hpp"

#include <numeric>
#include <string>
#include <utility>

namespace fedlora {

SketchMatrix::SketchMatrix(int rank, std::vector<int> active)
    : rank_(rank), active_(std::move(active)) {
  if (rank_ < 1) throw InvalidSketchRatio("sketch rank must be positive");
  if (active_.empty() || static_cast<int>(active_.size()) > rank_) {
    throw InvalidSketchRatio("sketch ratio must be in [1, rank], got k=" +
                             std::to_string(active_.size()) + " with rank " +
                             std::to_string(rank_));
  }
  std::sort(active_.begin(), active_.end());
  for (std::size_t i = 0; i < active_.size(); ++i) {
    if (active_[i] < 0 || active_[i] >= rank_) {
      throw InvalidSketchRatio("sketch index out of range");
    }
    if (i > 0 && active_[i] == active_[i - 1]) {
      throw InvalidSketchRatio("sketch indices must be distinct");
    }
  }
}

SketchMatrix SketchMatrix::identity(int rank) {
  std::vector<int> all(static_cast<std::size_t>(std::max(rank, 0)));
  std::iota(all.begin(), all.end(), 0);
  return SketchMatrix(rank, std::move(all));
}

SketchMatrix sample_sketch(int rank, int k, Rng& rng) {
  if (rank < 1) throw InvalidSketchRatio("sketch rank must be positive");
  if (k < 1 || k > rank) {
    throw InvalidSketchRatio("sketch ratio must be in [1, rank], got k=" +
                             std::to_string(k) + " with rank " +
                             std::to_string(rank));
  }
  // Partial Fisher-Yates: the first k slots end up a uniform k-subset.
  std::vector<int> pool(static_cast<std::size_t>(rank));
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(rank - i)));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(static_cast<std::size_t>(k));
  return SketchMatrix(rank, std::move(pool));
}

}  // namespace fedlora
