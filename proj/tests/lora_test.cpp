// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include <doctest.h>
#include <Eigen/Core>

#include "fedlora/errors.hpp"
#include "fedlora/lora.hpp"
#include "fedlora/rng.hpp"
#include "fedlora/sketch.hpp"
#include "testutil.hpp"

using fedlora::Batch;
using fedlora::LoraState;
using fedlora::Rng;
using fedlora::SketchMatrix;

namespace {

LoraState random_state(Rng& rng, int out, int in, int rank) {
  return LoraState(testutil::random_matrix(rng, out, in, 0.3),
                   testutil::random_matrix(rng, out, rank, 0.3),
                   testutil::random_matrix(rng, rank, in, 0.3));
}

}  // namespace

TEST_CASE("lora: state constructor rejects incompatible factor shapes") {
  Eigen::MatrixXd frozen = Eigen::MatrixXd::Zero(3, 5);
  CHECK_THROWS_AS(LoraState(frozen, Eigen::MatrixXd::Zero(3, 2), Eigen::MatrixXd::Zero(3, 5)),
                  fedlora::DimensionError);
  CHECK_THROWS_AS(LoraState(frozen, Eigen::MatrixXd::Zero(4, 2), Eigen::MatrixXd::Zero(2, 5)),
                  fedlora::DimensionError);
  CHECK_THROWS_AS(LoraState(frozen, Eigen::MatrixXd::Zero(3, 2), Eigen::MatrixXd::Zero(2, 4)),
                  fedlora::DimensionError);
  CHECK_NOTHROW(LoraState(frozen, Eigen::MatrixXd::Zero(3, 2), Eigen::MatrixXd::Zero(2, 5)));
}

TEST_CASE("lora: batch constructor rejects mismatched target length") {
  CHECK_THROWS_AS(Batch(Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXi::Zero(2)),
                  fedlora::DimensionError);
}

TEST_CASE("lora: fresh states start with zero B and small A") {
  Rng rng(1);
  const LoraState state = fedlora::make_lora_state(Eigen::MatrixXd::Zero(40, 80), 8, rng);
  CHECK(state.rank() == 8);
  CHECK(state.factor_b().norm() == 0.0);
  CHECK(state.factor_a().norm() > 0.0);
  const double stddev = std::sqrt(state.factor_a().array().square().mean());
  CHECK(stddev == doctest::Approx(0.02).epsilon(0.1));
}

TEST_CASE("lora: with zero B the loss equals the frozen model's loss") {
  Rng rng(2);
  const Eigen::MatrixXd frozen = testutil::random_matrix(rng, 4, 6, 0.5);
  const LoraState state(frozen, Eigen::MatrixXd::Zero(4, 3),
                        testutil::random_matrix(rng, 3, 6, 0.02));
  const Batch batch = testutil::random_batch(rng, 5, 6, 4);
  const double loss = fedlora::forward_loss(state, SketchMatrix::identity(3), batch);
  const double expect = testutil::oracle_softmax_loss(batch.inputs * frozen.transpose(), batch.targets);
  CHECK(loss == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("lora: two-class single-sample loss matches the scalar formula") {
  Eigen::MatrixXd frozen(2, 2);
  frozen << 0.5, -0.25, 0.1, 0.3;
  Eigen::MatrixXd b(2, 1);
  b << 0.2, -0.1;
  Eigen::MatrixXd a(1, 2);
  a << 0.05, 0.4;
  const LoraState state(frozen, b, a);
  Eigen::MatrixXd x(1, 2);
  x << 1.0, 2.0;
  Eigen::VectorXi y(1);
  y << 1;
  const Batch batch(x, y);

  const Eigen::MatrixXd w = frozen + b * a;
  const double z0 = x(0, 0) * w(0, 0) + x(0, 1) * w(0, 1);
  const double z1 = x(0, 0) * w(1, 0) + x(0, 1) * w(1, 1);
  const double expect = std::log(std::exp(z0) + std::exp(z1)) - z1;
  const double loss = fedlora::forward_loss(state, SketchMatrix::identity(1), batch);
  CHECK(loss == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("lora: empty batches and bad targets are rejected") {
  Rng rng(3);
  const LoraState state = random_state(rng, 3, 4, 2);
  const SketchMatrix s = SketchMatrix::identity(2);
  const Batch empty(Eigen::MatrixXd::Zero(0, 4), Eigen::VectorXi::Zero(0));
  CHECK_THROWS_AS(fedlora::forward_loss(state, s, empty), fedlora::EmptyBatchError);
  CHECK_THROWS_AS(fedlora::lora_grads(state, s, empty), fedlora::EmptyBatchError);

  Eigen::VectorXi bad(2);
  bad << 0, 3;
  const Batch out_of_range(testutil::random_matrix(rng, 2, 4), bad);
  CHECK_THROWS_AS(fedlora::forward_loss(state, s, out_of_range), fedlora::DimensionError);

  const Batch wrong_width = testutil::random_batch(rng, 2, 5, 3);
  CHECK_THROWS_AS(fedlora::forward_loss(state, s, wrong_width), fedlora::DimensionError);
}

TEST_CASE("lora: zero A makes the B gradient vanish") {
  Rng rng(4);
  const Eigen::MatrixXd frozen = testutil::random_matrix(rng, 4, 5, 0.5);
  const LoraState state(frozen, testutil::random_matrix(rng, 4, 3), Eigen::MatrixXd::Zero(3, 5));
  const Batch batch = testutil::random_batch(rng, 6, 5, 4);
  const fedlora::LoraGrads grads = fedlora::lora_grads(state, SketchMatrix(3, {0, 2}), batch);
  CHECK(grads.factor_b.norm() == 0.0);
}

TEST_CASE("lora: full-rank gradients match the dense oracle") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const LoraState state = random_state(rng, 5, 7, 3);
    const Batch batch = testutil::random_batch(rng, 4, 7, 5);
    const SketchMatrix s = SketchMatrix::identity(3);
    const fedlora::LoraGrads grads = fedlora::lora_grads(state, s, batch);
    const testutil::OracleGrads expect = testutil::oracle_lora_grads(
        state.frozen(), state.factor_b(), state.factor_a(), testutil::materialize(s), batch);
    CHECK((grads.factor_b - expect.factor_b).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((grads.factor_a - expect.factor_a).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("lora: sketched gradients match the dense oracle") {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const int rank = 2 + static_cast<int>(rng.uniform_below(3));
    const int keep = 1 + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(rank)));
    const LoraState state = random_state(rng, 4, 6, rank);
    const Batch batch = testutil::random_batch(rng, 5, 6, 4);
    const SketchMatrix s = fedlora::sample_sketch(rank, keep, rng);
    const fedlora::LoraGrads grads = fedlora::lora_grads(state, s, batch);
    const testutil::OracleGrads expect = testutil::oracle_lora_grads(
        state.frozen(), state.factor_b(), state.factor_a(), testutil::materialize(s), batch);
    CHECK((grads.factor_b - expect.factor_b).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((grads.factor_a - expect.factor_a).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("lora: gradients vanish outside the sketch's active set") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int rank = 3 + static_cast<int>(rng.uniform_below(3));
    const int keep = 1 + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(rank - 1)));
    const LoraState state = random_state(rng, 4, 5, rank);
    const Batch batch = testutil::random_batch(rng, 3, 5, 4);
    const SketchMatrix s = fedlora::sample_sketch(rank, keep, rng);
    const fedlora::LoraGrads grads = fedlora::lora_grads(state, s, batch);
    for (int j = 0; j < rank; ++j) {
      if (s.is_active(j)) continue;
      CHECK(grads.factor_b.col(j).norm() == 0.0);
      CHECK(grads.factor_a.row(j).norm() == 0.0);
    }
  }
}

TEST_CASE("lora: gradients agree with central finite differences") {
  Rng rng(8);
  const double step = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    const int out = 2 + static_cast<int>(rng.uniform_below(5));
    const int in = 2 + static_cast<int>(rng.uniform_below(5));
    const int rank = 1 + static_cast<int>(rng.uniform_below(4));
    const int keep = 1 + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(rank)));
    LoraState state = random_state(rng, out, in, rank);
    const Batch batch = testutil::random_batch(rng, 4, in, out);
    const SketchMatrix s = fedlora::sample_sketch(rank, keep, rng);
    const fedlora::LoraGrads grads = fedlora::lora_grads(state, s, batch);

    Eigen::MatrixXd fd_b(out, rank);
    for (int i = 0; i < out; ++i) {
      for (int j = 0; j < rank; ++j) {
        const double saved = state.factor_b()(i, j);
        state.factor_b()(i, j) = saved + step;
        const double up = fedlora::forward_loss(state, s, batch);
        state.factor_b()(i, j) = saved - step;
        const double down = fedlora::forward_loss(state, s, batch);
        state.factor_b()(i, j) = saved;
        fd_b(i, j) = (up - down) / (2.0 * step);
      }
    }
    Eigen::MatrixXd fd_a(rank, in);
    for (int i = 0; i < rank; ++i) {
      for (int j = 0; j < in; ++j) {
        const double saved = state.factor_a()(i, j);
        state.factor_a()(i, j) = saved + step;
        const double up = fedlora::forward_loss(state, s, batch);
        state.factor_a()(i, j) = saved - step;
        const double down = fedlora::forward_loss(state, s, batch);
        state.factor_a()(i, j) = saved;
        fd_a(i, j) = (up - down) / (2.0 * step);
      }
    }
    const double scale_b = std::max(1e-12, fd_b.norm());
    const double scale_a = std::max(1e-12, fd_a.norm());
    CHECK((grads.factor_b - fd_b).norm() / scale_b < 1e-4);
    CHECK((grads.factor_a - fd_a).norm() / scale_a < 1e-4);
  }
}

TEST_CASE("lora: evaluation reports merged-model loss and accuracy") {
  Rng rng(9);
  const LoraState state = random_state(rng, 3, 4, 2);
  const Batch batch = testutil::random_batch(rng, 8, 4, 3);
  const fedlora::EvalMetrics metrics = fedlora::evaluate(state, batch);
  const double expect_loss = fedlora::forward_loss(state, SketchMatrix::identity(2), batch);
  CHECK(metrics.loss == doctest::Approx(expect_loss).epsilon(1e-13));

  const Eigen::MatrixXd logits = batch.inputs * state.merged().transpose();
  int hits = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    logits.row(i).maxCoeff(&best);
    hits += (static_cast<int>(best) == batch.targets[i]) ? 1 : 0;
  }
  CHECK(metrics.accuracy == doctest::Approx(static_cast<double>(hits) / 8.0).epsilon(1e-13));
}

TEST_CASE("lora: repeated forward passes are bit identical") {
  Rng rng(10);
  const LoraState state = random_state(rng, 4, 4, 2);
  const Batch batch = testutil::random_batch(rng, 6, 4, 4);
  const SketchMatrix s = SketchMatrix(2, {1});
  CHECK(fedlora::forward_loss(state, s, batch) == fedlora::forward_loss(state, s, batch));
}
