// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>

#include <Eigen/Core>

#include "fedlora/errors.hpp"
#include "fedlora/rng.hpp"
#include "fedlora/sketch.hpp"

namespace fedlora {

// A labelled minibatch: one sample per row.
struct Batch {
  Batch(Eigen::MatrixXd inputs_, Eigen::VectorXi targets_)
      : inputs(std::move(inputs_)), targets(std::move(targets_)) {
    if (inputs.rows() != targets.size()) {
      throw DimensionError("Batch: inputs and targets must have equal leading dimension");
    }
  }

  Eigen::Index size() const { return inputs.rows(); }

  Eigen::MatrixXd inputs;
  Eigen::VectorXi targets;
};

// Frozen base weights plus the trainable low-rank factors. The effective
// weight under a sketch S is frozen + B S A.
class LoraState {
 public:
  LoraState(Eigen::MatrixXd frozen, Eigen::MatrixXd factor_b, Eigen::MatrixXd factor_a);

  const Eigen::MatrixXd& frozen() const { return frozen_; }
  const Eigen::MatrixXd& factor_b() const { return b_; }
  const Eigen::MatrixXd& factor_a() const { return a_; }
  Eigen::MatrixXd& factor_b() { return b_; }
  Eigen::MatrixXd& factor_a() { return a_; }

  int rank() const { return static_cast<int>(b_.cols()); }
  Eigen::Index out_dim() const { return frozen_.rows(); }
  Eigen::Index in_dim() const { return frozen_.cols(); }

  // Effective weights of the merged model, frozen + B A.
  Eigen::MatrixXd merged() const { return frozen_ + b_ * a_; }

 private:
  Eigen::MatrixXd frozen_;
  Eigen::MatrixXd b_;
  Eigen::MatrixXd a_;
};

// Standard init: B zero, A entries drawn N(0, 0.02^2).
LoraState make_lora_state(Eigen::MatrixXd frozen, int rank, Rng& rng);

struct LoraGrads {
  Eigen::MatrixXd factor_b;
  Eigen::MatrixXd factor_a;
};

struct EvalMetrics {
  double loss;
  double accuracy;
};

// Mean softmax cross-entropy of the sketched model on a batch.
double forward_loss(const LoraState& state, const SketchMatrix& sketch, const Batch& batch);

// Gradients of forward_loss with respect to both factors. Rows/columns
// outside the sketch's active set are exactly zero.
LoraGrads lora_grads(const LoraState& state, const SketchMatrix& sketch, const Batch& batch);

// Loss and top-1 accuracy of the merged (unsketched) model.
EvalMetrics evaluate(const LoraState& state, const Batch& batch);

namespace detail {
// Mean cross-entropy of row-wise softmax over `logits`; when `grad` is
// non-null it receives d(mean loss)/d(logits).
double softmax_xent(const Eigen::MatrixXd& logits, const Eigen::VectorXi& targets,
                    Eigen::MatrixXd* grad);
}  // namespace detail

}  // namespace fedlora
