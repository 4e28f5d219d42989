// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "fedlora/errors.hpp"
#include "fedlora/plan.hpp"
#include "fedlora/wireless.hpp"

namespace fedlora {

// Lumped constants of the rounds-to-target model
//   R(q, k) = A / (B - C y - D z),
// y = sum_n a_n^2 / q_n, z = sum_n (a_n^2 / q_n)(rank / k_n)^2.
// Only the ratios matter, so estimates are normalized to B = 1.
struct ConvergenceConstants {
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
  double D = 0.0;

  void validate() const;
};

// One calibration run: homogeneous (q, k) plan driven to a fixed loss level,
// summarized by its round count and the two load sums above.
struct ProbeObservation {
  double rounds;
  double y;
  double z;
};

double sampling_load(const Eigen::VectorXd& weights, const Eigen::VectorXd& probs);
double sketch_load(const Eigen::VectorXd& weights, const Eigen::VectorXd& probs,
                   const Eigen::VectorXi& ratios, int rank);

// Recovers (A, B, C, D) up to scale from four probes: each probe gives a row
// (1/R, -1, y, z) orthogonal to the constant vector, so the constants span
// the null space of the stacked matrix.
ConvergenceConstants estimate_constants(const std::array<ProbeObservation, 4>& probes);

// Per-client floor on the sampling probability below which the convergence
// model diverges: a_n^2 N (C + D K^2) / B with K = rank / min_m k_m.
Eigen::VectorXd feasibility_lower(const Eigen::VectorXd& weights, const Eigen::VectorXi& ratios,
                                  const ConvergenceConstants& constants, int rank);

constexpr double kFeasibilityMargin = 1e-6;

struct FeasibilityBounds {
  Eigen::VectorXd lower;

  bool admits(const Eigen::VectorXd& probs) const;
};

// As feasibility_lower, but throws PlanInfeasible naming the first client
// whose floor reaches 1.
FeasibilityBounds feasibility_bounds(const Eigen::VectorXd& weights,
                                     const Eigen::VectorXi& ratios,
                                     const ConvergenceConstants& constants, int rank);

// Estimated rounds to target for a plan. Throws PlanInfeasible when the
// denominator is not safely positive.
double rounds_estimate(const Plan& plan, const Eigen::VectorXd& weights,
                       const ConvergenceConstants& constants);

// Expected wall clock to target: rounds estimate times the per-round time
// bound. nullopt when the plan is outside the convergence region.
std::optional<double> p2_objective(const Plan& plan, const ConvergenceConstants& constants,
                                   const std::vector<ClientProfile>& profiles,
                                   double total_bandwidth);

struct QSolution {
  Eigen::VectorXd probs;
  double objective;
  double time_budget;  // value of the per-round time budget at the optimum
};

// Optimal sampling probabilities for fixed ratios: sweeps a grid over the
// per-round time budget, solving each fixed-budget subproblem in closed form
// via its stationarity condition, and keeps the grid point with the best
// true objective. grid_step <= 0 picks span/200.
QSolution solve_q_given_k(const Eigen::VectorXi& ratios, const ConvergenceConstants& constants,
                          const std::vector<ClientProfile>& profiles, double total_bandwidth,
                          int rank, double grid_step = 0.0);

// Coordinate descent on the ratios for fixed probabilities, from all-rank
// downward; accepts any single-client decrement that helps.
Eigen::VectorXi greedy_sketch_ratios(const Eigen::VectorXd& probs,
                                     const ConvergenceConstants& constants,
                                     const std::vector<ClientProfile>& profiles,
                                     double total_bandwidth, int rank);

struct AlternationResult {
  Plan plan;
  double objective;
  std::vector<double> trace;  // objective after each outer iteration
  int iterations;
};

// Alternates the two partial solvers until neither moves, starting from
// all-rank ratios. Returns the best plan seen; the trace never increases.
AlternationResult alternate(const std::vector<ClientProfile>& profiles,
                            const ConvergenceConstants& constants, double total_bandwidth,
                            int rank, double grid_step = 0.0, int max_iters = 20);

}  // namespace fedlora
