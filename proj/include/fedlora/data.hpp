// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "fedlora/errors.hpp"
#include "fedlora/lora.hpp"
#include "fedlora/rng.hpp"

namespace fedlora {

struct Dataset {
  Eigen::MatrixXd inputs;   // samples x features
  Eigen::VectorXi targets;  // class id per sample
  int classes = 0;

  Eigen::Index size() const { return inputs.rows(); }
};

struct MixtureSpec {
  int classes = 10;
  int features = 32;
  int samples = 20000;
  double center_scale = 3.0;  // class centers drawn N(0, center_scale^2)
  double noise = 4.4;         // isotropic within-class noise
};

// Balanced Gaussian mixture classification set; class c gets
// samples/classes points (remainder spread over the first classes).
Dataset make_gaussian_mixture(const MixtureSpec& spec, Rng& rng);

// Shuffle split into (train, eval). eval_fraction of the samples, at least
// one per side.
std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double eval_fraction, Rng& rng);

// Label-skew partition: per class, proportions ~ Dirichlet(alpha), each
// sample routed to a client by those proportions. Draws are repeated until
// every client owns at least one sample (up to a retry cap).
std::vector<Dataset> dirichlet_partition(const Dataset& data, int clients, double alpha,
                                         Rng& rng);

// Data shares a_n = |D_n| / sum |D_m|; sums to one exactly apart from
// rounding.
Eigen::VectorXd data_weights(const std::vector<Dataset>& parts);

// Minibatch sampled with replacement.
Batch draw_batch(const Dataset& data, int batch_size, Rng& rng);

// The whole dataset as one batch.
Batch as_batch(const Dataset& data);

}  // namespace fedlora
