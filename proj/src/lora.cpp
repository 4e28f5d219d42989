// SPDX-License-Identifier: Apache-2.0
#include "fedlora/lora.hpp"

#include <cmath>
#include <string>

namespace fedlora {

LoraState::LoraState(Eigen::MatrixXd frozen, Eigen::MatrixXd factor_b, Eigen::MatrixXd factor_a)
    : frozen_(std::move(frozen)), b_(std::move(factor_b)), a_(std::move(factor_a)) {
  if (b_.rows() != frozen_.rows() || a_.cols() != frozen_.cols() || b_.cols() != a_.rows()) {
    throw DimensionError("LoraState: factors must compose to the frozen weight shape");
  }
  if (b_.cols() < 1) throw DimensionError("LoraState: rank must be positive");
}

LoraState make_lora_state(Eigen::MatrixXd frozen, int rank, Rng& rng) {
  if (rank < 1) throw DimensionError("make_lora_state: rank must be positive");
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(frozen.rows(), rank);
  Eigen::MatrixXd a(rank, frozen.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = rng.normal(0.0, 0.02);
  }
  return LoraState(std::move(frozen), std::move(b), std::move(a));
}

namespace detail {

double softmax_xent(const Eigen::MatrixXd& logits, const Eigen::VectorXi& targets,
                    Eigen::MatrixXd* grad) {
  const Eigen::Index n = logits.rows();
  const Eigen::Index classes = logits.cols();
  if (n == 0) throw EmptyBatchError("softmax_xent: empty batch");
  if (targets.size() != n) {
    throw DimensionError("softmax_xent: one target per row required");
  }
  if (grad != nullptr) grad->resize(n, classes);

  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = targets[i];
    if (y < 0 || y >= classes) {
      throw DimensionError("softmax_xent: target class out of range");
    }
    const double peak = logits.row(i).maxCoeff();
    const Eigen::ArrayXd shifted = logits.row(i).array() - peak;
    const Eigen::ArrayXd expv = shifted.exp();
    const double denom = expv.sum();
    total += std::log(denom) - shifted[y];
    if (grad != nullptr) {
      grad->row(i) = (expv / denom).matrix().transpose() / static_cast<double>(n);
      (*grad)(i, y) -= 1.0 / static_cast<double>(n);
    }
  }
  return total / static_cast<double>(n);
}

}  // namespace detail

namespace {

Eigen::MatrixXd sketched_logits(const LoraState& state, const SketchMatrix& sketch,
                                const Batch& batch) {
  if (batch.size() == 0) throw EmptyBatchError("forward pass on an empty batch");
  if (batch.inputs.cols() != state.in_dim()) {
    throw DimensionError("batch feature dimension does not match the model");
  }
  const Eigen::MatrixXd effective =
      state.frozen() + apply_sketch(state.factor_b(), sketch, state.factor_a());
  return batch.inputs * effective.transpose();
}

}  // namespace

double forward_loss(const LoraState& state, const SketchMatrix& sketch, const Batch& batch) {
  return detail::softmax_xent(sketched_logits(state, sketch, batch), batch.targets, nullptr);
}

LoraGrads lora_grads(const LoraState& state, const SketchMatrix& sketch, const Batch& batch) {
  Eigen::MatrixXd dlogits;
  detail::softmax_xent(sketched_logits(state, sketch, batch), batch.targets, &dlogits);
  // G = dL/dW for the effective weight, out_dim x in_dim.
  const Eigen::MatrixXd g = dlogits.transpose() * batch.inputs;

  const auto& idx = sketch.active_indices();
  LoraGrads out{Eigen::MatrixXd::Zero(state.out_dim(), state.rank()),
                Eigen::MatrixXd::Zero(state.rank(), state.in_dim())};
  // Chain rule through B S A touches only the active coordinates.
  out.factor_b(Eigen::all, idx) =
      sketch.scale() * (g * state.factor_a()(idx, Eigen::all).transpose());
  out.factor_a(idx, Eigen::all) =
      sketch.scale() * (state.factor_b()(Eigen::all, idx).transpose() * g);
  return out;
}

EvalMetrics evaluate(const LoraState& state, const Batch& batch) {
  if (batch.size() == 0) throw EmptyBatchError("evaluate on an empty batch");
  if (batch.inputs.cols() != state.in_dim()) {
    throw DimensionError("batch feature dimension does not match the model");
  }
  const Eigen::MatrixXd logits = batch.inputs * state.merged().transpose();
  const double loss = detail::softmax_xent(logits, batch.targets, nullptr);

  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best;
    logits.row(i).maxCoeff(&best);
    if (static_cast<int>(best) == batch.targets[i]) ++hits;
  }
  return {loss, static_cast<double>(hits) / static_cast<double>(logits.rows())};
}

}  // namespace fedlora
