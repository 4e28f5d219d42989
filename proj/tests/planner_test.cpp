// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include <doctest.h>
#include <Eigen/Core>

#include "fedlora/errors.hpp"
#include "fedlora/plan.hpp"
#include "fedlora/planner.hpp"
#include "fedlora/rng.hpp"
#include "fedlora/wireless.hpp"

using fedlora::ClientProfile;
using fedlora::ConvergenceConstants;
using fedlora::Plan;
using fedlora::ProbeObservation;
using fedlora::Rng;

namespace {

// Forward model used to manufacture probe observations from known constants.
double model_rounds(const ConvergenceConstants& c, double y, double z) {
  return c.A / (c.B - c.C * y - c.D * z);
}

std::array<ProbeObservation, 4> synth_probes(const ConvergenceConstants& c) {
  const double ys[4] = {0.5, 2.0, 1.0, 3.0};
  const double zs[4] = {1.0, 2.0, 8.0, 4.0};
  std::array<ProbeObservation, 4> probes{};
  for (int i = 0; i < 4; ++i) probes[i] = {model_rounds(c, ys[i], zs[i]), ys[i], zs[i]};
  return probes;
}

std::vector<ClientProfile> symmetric_profiles(int n, double tau, double t) {
  return std::vector<ClientProfile>(static_cast<std::size_t>(n), {1.0 / n, tau, t});
}

// Per-client pieces of the fixed-ratio objective, mirroring the planner's
// internal parameterization. d_n is the curvature constant, c_n the expected
// per-round time a unit of probability buys.
struct Pieces {
  Eigen::VectorXd d;
  Eigen::VectorXd c;
  Eigen::VectorXd floor;
  double nb;
};

Pieces make_pieces(const std::vector<ClientProfile>& profiles, const Eigen::VectorXi& ratios,
                   const ConvergenceConstants& constants, double bandwidth, int rank) {
  const auto n = static_cast<Eigen::Index>(profiles.size());
  Pieces p;
  p.d.resize(n);
  p.c.resize(n);
  p.nb = static_cast<double>(n) * constants.B;
  const Eigen::VectorXd weights = fedlora::profile_weights(profiles);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double inv = static_cast<double>(rank) / ratios[i];
    p.d[i] = static_cast<double>(n) * static_cast<double>(n) * weights[i] * weights[i] *
             (constants.C + constants.D * inv * inv);
    const double frac = static_cast<double>(ratios[i]) / rank;
    p.c[i] = frac * frac *
             (profiles[static_cast<std::size_t>(i)].t_full / bandwidth +
              profiles[static_cast<std::size_t>(i)].tau_full);
  }
  p.floor = fedlora::feasibility_lower(weights, ratios, constants, rank) *
            (1.0 + fedlora::kFeasibilityMargin);
  return p;
}

// Separable upper bound on the rounds factor: sum_n A q_n / (N B q_n - d_n).
double surrogate_rounds(const Pieces& p, const ConvergenceConstants& constants,
                        const Eigen::VectorXd& q) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    total += constants.A * q[i] / (p.nb * q[i] - p.d[i]);
  }
  return total;
}

}  // namespace

TEST_CASE("planner: load sums follow their definitions") {
  Eigen::VectorXd w(2);
  w << 0.25, 0.75;
  Eigen::VectorXd q(2);
  q << 0.5, 0.9;
  CHECK(fedlora::sampling_load(w, q) ==
        doctest::Approx(0.0625 / 0.5 + 0.5625 / 0.9).epsilon(1e-15));

  Eigen::VectorXi k(2);
  k << 2, 4;
  const double expect = 0.0625 / 0.5 * 4.0 + 0.5625 / 0.9 * 1.0;
  CHECK(fedlora::sketch_load(w, q, k, 4) == doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("planner: constants are recovered from exact synthetic probes") {
  const ConvergenceConstants truth{2.0, 1.0, 0.1, 0.05};
  const ConvergenceConstants got = fedlora::estimate_constants(synth_probes(truth));
  CHECK(got.B == 1.0);
  CHECK(got.A / got.B == doctest::Approx(truth.A / truth.B).epsilon(1e-6));
  CHECK(got.C / got.B == doctest::Approx(truth.C / truth.B).epsilon(1e-6));
  CHECK(got.D / got.B == doctest::Approx(truth.D / truth.B).epsilon(1e-6));
}

TEST_CASE("planner: repeated probes are rejected as rank deficient") {
  std::array<ProbeObservation, 4> probes{};
  for (int i = 0; i < 4; ++i) probes[i] = {10.0, 1.5, 3.0};
  CHECK_THROWS_AS(fedlora::estimate_constants(probes), fedlora::DegenerateProbes);
}

TEST_CASE("planner: probes from a sign-flipped model are rejected") {
  // Rounds that shrink as the sampling load grows cannot come from the
  // convergence model with positive constants.
  const double ys[4] = {0.5, 2.0, 1.0, 3.0};
  const double zs[4] = {1.0, 2.0, 8.0, 4.0};
  std::array<ProbeObservation, 4> probes{};
  for (int i = 0; i < 4; ++i) {
    probes[i] = {2.0 / (1.0 + 0.1 * ys[i] - 0.05 * zs[i]), ys[i], zs[i]};
  }
  CHECK_THROWS_AS(fedlora::estimate_constants(probes), fedlora::InconsistentObservations);
}

TEST_CASE("planner: probe observations themselves are validated") {
  std::array<ProbeObservation, 4> probes = synth_probes({2.0, 1.0, 0.1, 0.05});
  probes[2].rounds = 0.5;
  CHECK_THROWS_AS(fedlora::estimate_constants(probes), fedlora::InconsistentObservations);
  probes = synth_probes({2.0, 1.0, 0.1, 0.05});
  probes[1].y = 0.0;
  CHECK_THROWS_AS(fedlora::estimate_constants(probes), fedlora::InconsistentObservations);
}

TEST_CASE("planner: feasibility floors follow the closed form") {
  const ConvergenceConstants c{2.0, 2.0, 0.1, 0.05};
  const int n = 4;
  const Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 0.25);

  // All-rank ratios make the worst-case inverse ratio 1.
  const Eigen::VectorXd at_rank =
      fedlora::feasibility_lower(w, Eigen::VectorXi::Constant(n, 8), c, 8);
  for (int i = 0; i < n; ++i) {
    CHECK(at_rank[i] == doctest::Approx((c.C + c.D) / (n * c.B)).epsilon(1e-12));
  }

  // The smallest ratio anywhere drives every client's floor.
  Eigen::VectorXi mixed(n);
  mixed << 8, 2, 8, 4;
  const Eigen::VectorXd at_mixed = fedlora::feasibility_lower(w, mixed, c, 8);
  const double worst = 8.0 / 2.0;
  for (int i = 0; i < n; ++i) {
    CHECK(at_mixed[i] ==
          doctest::Approx(0.0625 * n * (c.C + c.D * worst * worst) / c.B).epsilon(1e-12));
  }

  // Quadratic in the data share.
  Eigen::VectorXd skewed(2);
  skewed << 0.2, 0.8;
  const Eigen::VectorXd floors =
      fedlora::feasibility_lower(skewed, Eigen::VectorXi::Constant(2, 4), c, 4);
  CHECK(floors[1] == doctest::Approx(16.0 * floors[0]).epsilon(1e-12));
}

TEST_CASE("planner: a dominant client can make every plan infeasible") {
  const ConvergenceConstants c{1.0, 1.0, 0.3, 0.3};
  Eigen::VectorXd w(2);
  w << 0.95, 0.05;
  const Eigen::VectorXi k = Eigen::VectorXi::Constant(2, 4);
  bool thrown = false;
  try {
    fedlora::feasibility_bounds(w, k, c, 4);
  } catch (const fedlora::PlanInfeasible& e) {
    thrown = true;
    CHECK(e.client == 0);
  }
  CHECK(thrown);
}

TEST_CASE("planner: feasibility bounds admit exactly the margin-padded box") {
  const ConvergenceConstants c{1.0, 1.0, 0.05, 0.02};
  const Eigen::VectorXd w = Eigen::VectorXd::Constant(2, 0.5);
  const Eigen::VectorXi k = Eigen::VectorXi::Constant(2, 4);
  const fedlora::FeasibilityBounds bounds = fedlora::feasibility_bounds(w, k, c, 4);

  Eigen::VectorXd q = bounds.lower * (1.0 + 2.0 * fedlora::kFeasibilityMargin);
  CHECK(bounds.admits(q));
  q[0] = bounds.lower[0];
  CHECK_FALSE(bounds.admits(q));
  q[0] = 1.5;
  CHECK_FALSE(bounds.admits(q));
}

TEST_CASE("planner: the rounds estimate reproduces the forward model") {
  const ConvergenceConstants c{2.0, 1.0, 0.1, 0.05};
  const int n = 2;
  const Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 0.5);
  Eigen::VectorXd q(n);
  q << 0.6, 0.9;
  Eigen::VectorXi k(n);
  k << 2, 4;
  const Plan plan(q, k, 4);
  const double y = fedlora::sampling_load(w, q);
  const double z = fedlora::sketch_load(w, q, k, 4);
  CHECK(fedlora::rounds_estimate(plan, w, c) ==
        doctest::Approx(model_rounds(c, y, z)).epsilon(1e-12));
}

TEST_CASE("planner: more sampling never means more rounds") {
  const ConvergenceConstants c{2.0, 1.0, 0.1, 0.05};
  const Eigen::VectorXd w = Eigen::VectorXd::Constant(3, 1.0 / 3);
  const Eigen::VectorXi k = Eigen::VectorXi::Constant(3, 4);
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd q(3);
    for (int i = 0; i < 3; ++i) q[i] = rng.uniform(0.2, 0.9);
    Eigen::VectorXd more = q;
    more[static_cast<Eigen::Index>(rng.uniform_below(3))] += 0.1;
    const double base = fedlora::rounds_estimate(Plan(q, k, 4), w, c);
    const double bumped = fedlora::rounds_estimate(Plan(more, k, 4), w, c);
    CHECK(bumped <= base + 1e-12);
  }
}

TEST_CASE("planner: plans outside the convergence region are refused") {
  const ConvergenceConstants c{2.0, 1.0, 0.5, 0.5};
  const Eigen::VectorXd w = Eigen::VectorXd::Constant(2, 0.5);
  const Eigen::VectorXi k = Eigen::VectorXi::Constant(2, 2);
  const Eigen::VectorXd q = Eigen::VectorXd::Constant(2, 0.1);
  CHECK_THROWS_AS(fedlora::rounds_estimate(Plan(q, k, 2), w, c), fedlora::PlanInfeasible);

  const std::vector<ClientProfile> profiles = symmetric_profiles(2, 1.0, 4.0);
  CHECK_FALSE(fedlora::p2_objective(Plan(q, k, 2), c, profiles, 10.0).has_value());
}

TEST_CASE("planner: single-client objective matches direct substitution") {
  const ConvergenceConstants c{2.0, 1.0, 0.05, 0.02};
  const std::vector<ClientProfile> profiles = {{1.0, 1.5, 6.0}};
  Eigen::VectorXd q(1);
  q << 0.8;
  Eigen::VectorXi k(1);
  k << 2;
  const Plan plan(q, k, 4);
  const double y = 1.0 / 0.8;
  const double z = (16.0 / 4.0) / 0.8;
  const double time = 0.25 * 0.8 * (6.0 / 10.0 + 1.5);
  const std::optional<double> got = fedlora::p2_objective(plan, c, profiles, 10.0);
  REQUIRE(got.has_value());
  CHECK(*got == doctest::Approx(model_rounds(c, y, z) * time).epsilon(1e-12));
}

TEST_CASE("planner: identical clients get identical probabilities") {
  const ConvergenceConstants c{2.0, 1.0, 0.05, 0.02};
  const std::vector<ClientProfile> profiles = symmetric_profiles(2, 2.0, 8.0);
  const Eigen::VectorXi k = Eigen::VectorXi::Constant(2, 3);
  const fedlora::QSolution sol = fedlora::solve_q_given_k(k, c, profiles, 25.0, 4);
  CHECK(std::abs(sol.probs[0] - sol.probs[1]) < 1e-6);
  CHECK(sol.objective > 0.0);
}

TEST_CASE("planner: solver satisfies stationarity and budget equality") {
  const ConvergenceConstants c{1.5, 1.0, 0.04, 0.03};
  const std::vector<ClientProfile> profiles = {
      {0.5, 1.0, 4.0}, {0.3, 3.0, 12.0}, {0.2, 0.6, 2.0}};
  Eigen::VectorXi k(3);
  k << 4, 2, 3;
  const int rank = 4;
  const double bandwidth = 20.0;
  const fedlora::QSolution sol = fedlora::solve_q_given_k(k, c, profiles, bandwidth, rank);

  const Pieces p = make_pieces(profiles, k, c, bandwidth, rank);
  CHECK(std::abs(p.c.dot(sol.probs) - sol.time_budget) <=
        1e-8 * std::max(1.0, sol.time_budget));

  // Unclipped coordinates share one multiplier: lambda_i = A M d_i /
  // (c_i (N B q_i - d_i)^2) must agree, which is the stationarity condition
  // of the fixed-budget subproblem.
  std::vector<double> lambdas;
  for (Eigen::Index i = 0; i < 3; ++i) {
    const double q = sol.probs[i];
    if (q <= p.floor[i] * (1.0 + 1e-9) || q >= 1.0 - 1e-12) continue;
    const double gap = p.nb * q - p.d[i];
    lambdas.push_back(c.A * sol.time_budget * p.d[i] / (p.c[i] * gap * gap));
  }
  REQUIRE(lambdas.size() >= 2);
  for (std::size_t i = 1; i < lambdas.size(); ++i) {
    const double residual = -lambdas[0] * 1.0 + lambdas[i];
    CHECK(std::abs(residual) <= 1e-8 * std::max(1.0, lambdas[0]));
  }
}

TEST_CASE("planner: with vanishing curvature the floors win") {
  const ConvergenceConstants c{2.0, 1.0, 1e-12, 1e-12};
  const std::vector<ClientProfile> profiles = symmetric_profiles(3, 1.0, 5.0);
  const Eigen::VectorXi k = Eigen::VectorXi::Constant(3, 4);
  const fedlora::QSolution sol = fedlora::solve_q_given_k(k, c, profiles, 10.0, 4);
  // The time term dominates, so the optimum collapses onto the (tiny)
  // feasibility floors.
  CHECK(sol.probs.maxCoeff() < 1e-8);
  const Pieces p = make_pieces(profiles, k, c, 10.0, 4);
  for (int i = 0; i < 3; ++i) CHECK(sol.probs[i] <= 2.0 * p.floor[i]);
}

TEST_CASE("planner: single-client optimum sits at the analytic stationary point") {
  const ConvergenceConstants c{2.0, 1.0, 0.08, 0.05};
  const std::vector<ClientProfile> profiles = {{1.0, 1.0, 5.0}};
  Eigen::VectorXi k(1);
  k << 2;
  const int rank = 4;
  // Objective A c q^2 / (B q - u) is minimized at q = 2u / B.
  const double u = c.C + c.D * 4.0;
  const double q_star = std::min(1.0, 2.0 * u / c.B);
  const fedlora::QSolution sol = fedlora::solve_q_given_k(k, c, profiles, 10.0, rank, 1e-5);
  CHECK(sol.probs[0] == doctest::Approx(q_star).epsilon(1e-3));
}

TEST_CASE("planner: the separable surrogate dominates the true rounds factor") {
  Rng rng(2);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_below(4));
    std::vector<ClientProfile> profiles;
    Eigen::VectorXd raw(n);
    for (int i = 0; i < n; ++i) raw[i] = rng.uniform(0.5, 2.0);
    raw /= raw.sum();
    for (int i = 0; i < n; ++i) profiles.push_back({raw[i], 1.0, 1.0});
    const ConvergenceConstants c{rng.uniform(0.5, 3.0), 1.0, rng.uniform(0.001, 0.05),
                                 rng.uniform(0.001, 0.05)};
    const int rank = 4;
    Eigen::VectorXi k(n);
    for (int i = 0; i < n; ++i) k[i] = 1 + static_cast<int>(rng.uniform_below(rank));

    const Pieces p = make_pieces(profiles, k, c, 10.0, rank);
    Eigen::VectorXd q(n);
    for (int i = 0; i < n; ++i) q[i] = rng.uniform(std::min(1.0, 2.0 * p.floor[i]), 1.0);

    const Eigen::VectorXd w = fedlora::profile_weights(profiles);
    const double truth = fedlora::rounds_estimate(Plan(q, k, rank), w, c);
    const double surrogate = surrogate_rounds(p, c, q);
    CHECK(surrogate >= truth - 1e-12);
  }
}

TEST_CASE("planner: the surrogate is tight for homogeneous clients") {
  const ConvergenceConstants c{2.0, 1.0, 0.05, 0.03};
  const int n = 3;
  const std::vector<ClientProfile> profiles = symmetric_profiles(n, 1.0, 1.0);
  const Eigen::VectorXi k = Eigen::VectorXi::Constant(n, 2);
  const Pieces p = make_pieces(profiles, k, c, 10.0, 4);
  const Eigen::VectorXd q = Eigen::VectorXd::Constant(n, 0.7);
  const Eigen::VectorXd w = fedlora::profile_weights(profiles);
  const double truth = fedlora::rounds_estimate(Plan(q, k, 4), w, c);
  CHECK(surrogate_rounds(p, c, q) == doctest::Approx(truth).epsilon(1e-12));
}

TEST_CASE("planner: the surrogate is midpoint convex on the feasible box") {
  Rng rng(3);
  const ConvergenceConstants c{2.0, 1.0, 0.04, 0.02};
  const int n = 3;
  const std::vector<ClientProfile> profiles = symmetric_profiles(n, 1.0, 1.0);
  const Eigen::VectorXi k = Eigen::VectorXi::Constant(n, 2);
  const Pieces p = make_pieces(profiles, k, c, 10.0, 4);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd qa(n);
    Eigen::VectorXd qb(n);
    for (int i = 0; i < n; ++i) {
      qa[i] = rng.uniform(2.0 * p.floor[i], 1.0);
      qb[i] = rng.uniform(2.0 * p.floor[i], 1.0);
    }
    const double mid = surrogate_rounds(p, c, 0.5 * (qa + qb));
    const double avg = 0.5 * (surrogate_rounds(p, c, qa) + surrogate_rounds(p, c, qb));
    CHECK(mid <= avg + 1e-10);
  }
}

TEST_CASE("planner: rank-one models leave no ratio choice") {
  const ConvergenceConstants c{2.0, 1.0, 0.05, 0.02};
  const std::vector<ClientProfile> profiles = symmetric_profiles(2, 1.0, 4.0);
  const Eigen::VectorXd q = Eigen::VectorXd::Constant(2, 0.9);
  const Eigen::VectorXi ratios = fedlora::greedy_sketch_ratios(q, c, profiles, 10.0, 1);
  CHECK(ratios[0] == 1);
  CHECK(ratios[1] == 1);
}

TEST_CASE("planner: cheap communication pushes single-client ratios to one") {
  // With negligible curvature the round time rules, and it shrinks with k.
  const ConvergenceConstants c{1.0, 1.0, 1e-6, 1e-6};
  const std::vector<ClientProfile> profiles = {{1.0, 2.0, 50.0}};
  const Eigen::VectorXd q = Eigen::VectorXd::Constant(1, 1.0);
  const Eigen::VectorXi ratios = fedlora::greedy_sketch_ratios(q, c, profiles, 10.0, 4);
  CHECK(ratios[0] == 1);
}

TEST_CASE("planner: single-client greedy descent finds the exhaustive best ratio") {
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const ConvergenceConstants c{rng.uniform(0.5, 3.0), 1.0, rng.uniform(0.001, 0.02),
                                 rng.uniform(0.01, 0.2)};
    const std::vector<ClientProfile> profiles = {{1.0, rng.uniform(0.5, 3.0),
                                                  rng.uniform(2.0, 30.0)}};
    const int rank = 8;
    const Eigen::VectorXd q = Eigen::VectorXd::Constant(1, rng.uniform(0.6, 1.0));

    double best = 0.0;
    int best_k = 0;
    for (int k = 1; k <= rank; ++k) {
      const std::optional<double> objective = fedlora::p2_objective(
          Plan(q, Eigen::VectorXi::Constant(1, k), rank), c, profiles, 10.0);
      if (!objective) continue;
      const Eigen::VectorXd floor = fedlora::feasibility_lower(
          fedlora::profile_weights(profiles), Eigen::VectorXi::Constant(1, k), c, rank);
      if (!(q[0] >= floor[0] * (1.0 + fedlora::kFeasibilityMargin))) continue;
      if (best_k == 0 || *objective < best) {
        best = *objective;
        best_k = k;
      }
    }
    REQUIRE(best_k > 0);
    const Eigen::VectorXi got = fedlora::greedy_sketch_ratios(q, c, profiles, 10.0, rank);
    const std::optional<double> got_objective =
        fedlora::p2_objective(Plan(q, got, rank), c, profiles, 10.0);
    REQUIRE(got_objective.has_value());
    // Descent stops at the first local minimum; for these single-client
    // instances the objective is unimodal in k, so it is also global.
    CHECK(*got_objective <= best * (1.0 + 1e-12));
  }
}

TEST_CASE("planner: alternation improves monotonically and returns its best plan") {
  Rng rng(5);
  int nontrivial = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_below(4));
    Eigen::VectorXd raw(n);
    for (int i = 0; i < n; ++i) raw[i] = rng.uniform(0.5, 2.0);
    raw /= raw.sum();
    std::vector<ClientProfile> profiles;
    for (int i = 0; i < n; ++i) {
      profiles.push_back({raw[i], rng.uniform(0.5, 4.0), rng.uniform(2.0, 40.0)});
    }
    const ConvergenceConstants c{rng.uniform(0.5, 3.0), 1.0, rng.uniform(0.002, 0.03),
                                 rng.uniform(0.002, 0.03)};
    const int rank = 4;
    const double bandwidth = rng.uniform(5.0, 100.0);

    const fedlora::AlternationResult result =
        fedlora::alternate(profiles, c, bandwidth, rank);
    REQUIRE(!result.trace.empty());
    for (std::size_t i = 1; i < result.trace.size(); ++i) {
      CHECK(result.trace[i] <=
            result.trace[i - 1] + 1e-9 * std::max(1.0, result.trace[i - 1]));
    }
    CHECK(result.objective ==
          doctest::Approx(*std::min_element(result.trace.begin(), result.trace.end()))
              .epsilon(1e-12));

    const std::optional<double> check =
        fedlora::p2_objective(result.plan, c, profiles, bandwidth);
    REQUIRE(check.has_value());
    CHECK(*check == doctest::Approx(result.objective).epsilon(1e-9));
    if (result.trace.size() > 1) ++nontrivial;
  }
  CHECK(nontrivial > 0);
}

TEST_CASE("planner: alternation is deterministic and scale invariant") {
  const std::vector<ClientProfile> profiles = {
      {0.5, 1.0, 5.0}, {0.3, 2.5, 20.0}, {0.2, 0.7, 3.0}};
  const ConvergenceConstants c{1.8, 1.0, 0.02, 0.01};
  const ConvergenceConstants scaled{5.0 * 1.8, 5.0, 5.0 * 0.02, 5.0 * 0.01};

  const fedlora::AlternationResult one = fedlora::alternate(profiles, c, 30.0, 8);
  const fedlora::AlternationResult two = fedlora::alternate(profiles, c, 30.0, 8);
  CHECK((one.plan.sampling_probs() - two.plan.sampling_probs()).norm() == 0.0);
  CHECK((one.plan.sketch_ratios() - two.plan.sketch_ratios()).norm() == 0);

  // Only the constant ratios are identifiable, so a common rescale cannot
  // change the answer.
  const fedlora::AlternationResult rescaled = fedlora::alternate(profiles, scaled, 30.0, 8);
  CHECK((one.plan.sketch_ratios() - rescaled.plan.sketch_ratios()).norm() == 0);
  CHECK((one.plan.sampling_probs() - rescaled.plan.sampling_probs()).cwiseAbs().maxCoeff() <
        1e-8);
  CHECK(one.objective == doctest::Approx(rescaled.objective).epsilon(1e-8));
}
