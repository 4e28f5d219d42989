// SPDX-License-Identifier: Apache-2.0
#include "fedlora/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include <Eigen/SVD>

namespace fedlora {

void ConvergenceConstants::validate() const {
  const bool ok = std::isfinite(A) && std::isfinite(B) && std::isfinite(C) &&
                  std::isfinite(D) && A > 0.0 && B > 0.0 && C > 0.0 && D > 0.0;
  if (!ok) {
    throw InconsistentObservations("convergence constants must all be positive and finite");
  }
}

double sampling_load(const Eigen::VectorXd& weights, const Eigen::VectorXd& probs) {
  if (weights.size() != probs.size() || weights.size() == 0) {
    throw DimensionError("sampling_load: weights and probabilities must match");
  }
  return (weights.array().square() / probs.array()).sum();
}

double sketch_load(const Eigen::VectorXd& weights, const Eigen::VectorXd& probs,
                   const Eigen::VectorXi& ratios, int rank) {
  if (weights.size() != probs.size() || weights.size() != ratios.size() || rank < 1) {
    throw DimensionError("sketch_load: weights, probabilities and ratios must match");
  }
  double total = 0.0;
  for (Eigen::Index n = 0; n < weights.size(); ++n) {
    const double inv = static_cast<double>(rank) / ratios[n];
    total += weights[n] * weights[n] / probs[n] * inv * inv;
  }
  return total;
}

ConvergenceConstants estimate_constants(const std::array<ProbeObservation, 4>& probes) {
  Eigen::Matrix4d m;
  for (int i = 0; i < 4; ++i) {
    if (!(probes[i].rounds >= 1.0) || !(probes[i].y > 0.0) || !(probes[i].z > 0.0)) {
      throw InconsistentObservations("probe " + std::to_string(i) +
                                     ": need rounds >= 1 and positive loads");
    }
    m.row(i) << 1.0 / probes[i].rounds, -1.0, probes[i].y, probes[i].z;
  }

  Eigen::JacobiSVD<Eigen::Matrix4d> svd(m, Eigen::ComputeFullV);
  const Eigen::Vector4d& sv = svd.singularValues();
  if (!(sv[2] > 1e-9 * sv[0])) {
    throw DegenerateProbes("probe observations are rank deficient; pick more varied probes");
  }

  Eigen::Vector4d v = svd.matrixV().col(3);
  if (v[0] < 0.0) v = -v;
  for (int i = 0; i < 4; ++i) {
    if (!(v[i] > 0.0)) {
      throw InconsistentObservations(
          "probe observations admit no positive constant vector; the runs do not fit the "
          "convergence model");
    }
  }
  v /= v[1];  // only ratios are identifiable; pin B = 1
  ConvergenceConstants constants{v[0], v[1], v[2], v[3]};
  constants.validate();
  return constants;
}

Eigen::VectorXd feasibility_lower(const Eigen::VectorXd& weights, const Eigen::VectorXi& ratios,
                                  const ConvergenceConstants& constants, int rank) {
  constants.validate();
  const Eigen::Index n = weights.size();
  if (n == 0 || ratios.size() != n) {
    throw DimensionError("feasibility_lower: weights and ratios must match");
  }
  int min_ratio = rank;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (ratios[i] < 1 || ratios[i] > rank) {
      throw InvalidSketchRatio("feasibility_lower: ratio out of [1, rank]");
    }
    min_ratio = std::min(min_ratio, ratios[i]);
  }
  const double worst = static_cast<double>(rank) / min_ratio;
  const double load = constants.C + constants.D * worst * worst;
  return weights.array().square() * static_cast<double>(n) * load / constants.B;
}

bool FeasibilityBounds::admits(const Eigen::VectorXd& probs) const {
  if (probs.size() != lower.size()) return false;
  for (Eigen::Index n = 0; n < probs.size(); ++n) {
    if (!(probs[n] >= lower[n] * (1.0 + kFeasibilityMargin)) || probs[n] > 1.0) return false;
  }
  return true;
}

FeasibilityBounds feasibility_bounds(const Eigen::VectorXd& weights,
                                     const Eigen::VectorXi& ratios,
                                     const ConvergenceConstants& constants, int rank) {
  FeasibilityBounds bounds{feasibility_lower(weights, ratios, constants, rank)};
  for (Eigen::Index n = 0; n < bounds.lower.size(); ++n) {
    if (bounds.lower[n] * (1.0 + kFeasibilityMargin) > 1.0) {
      throw PlanInfeasible("client " + std::to_string(n) +
                               " needs sampling probability above 1 to converge",
                           static_cast<int>(n));
    }
  }
  return bounds;
}

namespace {

// Denominator of the rounds model; positive inside the convergence region.
double rounds_denominator(const Plan& plan, const Eigen::VectorXd& weights,
                          const ConvergenceConstants& constants) {
  const double y = sampling_load(weights, plan.sampling_probs());
  const double z = sketch_load(weights, plan.sampling_probs(), plan.sketch_ratios(), plan.rank());
  return constants.B - constants.C * y - constants.D * z;
}

}  // namespace

double rounds_estimate(const Plan& plan, const Eigen::VectorXd& weights,
                       const ConvergenceConstants& constants) {
  constants.validate();
  if (weights.size() != plan.clients()) {
    throw DimensionError("rounds_estimate: weights must cover the plan's clients");
  }
  const double denom = rounds_denominator(plan, weights, constants);
  if (!(denom > 1e-12 * constants.B)) {
    throw PlanInfeasible("plan sits outside the convergence region");
  }
  return constants.A / denom;
}

std::optional<double> p2_objective(const Plan& plan, const ConvergenceConstants& constants,
                                   const std::vector<ClientProfile>& profiles,
                                   double total_bandwidth) {
  constants.validate();
  validate_profiles(profiles);
  const Eigen::VectorXd weights = profile_weights(profiles);
  if (weights.size() != plan.clients()) {
    throw DimensionError("p2_objective: profiles must cover the plan's clients");
  }
  const double denom = rounds_denominator(plan, weights, constants);
  if (!(denom > 1e-12 * constants.B)) return std::nullopt;
  return constants.A / denom * expected_round_time_bound(plan, profiles, total_bandwidth);
}

namespace {

struct SubproblemTerms {
  Eigen::VectorXd time_coeff;  // c_n: per-round expected time per unit probability
  Eigen::VectorXd curvature;   // d_n: N^2 a_n^2 (C + D (rank/k_n)^2)
  Eigen::VectorXd floor;       // feasibility lower bounds with margin applied
  double nb = 0.0;             // N * B
};

SubproblemTerms make_terms(const Eigen::VectorXi& ratios, const ConvergenceConstants& constants,
                           const std::vector<ClientProfile>& profiles, double total_bandwidth,
                           int rank) {
  const auto n = static_cast<Eigen::Index>(profiles.size());
  const Eigen::VectorXd weights = profile_weights(profiles);
  SubproblemTerms terms;
  terms.time_coeff.resize(n);
  terms.curvature.resize(n);
  terms.nb = static_cast<double>(n) * constants.B;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double frac = static_cast<double>(ratios[i]) / rank;
    terms.time_coeff[i] =
        frac * frac *
        (profiles[static_cast<std::size_t>(i)].t_full / total_bandwidth +
         profiles[static_cast<std::size_t>(i)].tau_full);
    const double inv = static_cast<double>(rank) / ratios[i];
    terms.curvature[i] = static_cast<double>(n) * static_cast<double>(n) * weights[i] *
                         weights[i] * (constants.C + constants.D * inv * inv);
  }
  const FeasibilityBounds bounds = feasibility_bounds(weights, ratios, constants, rank);
  terms.floor = bounds.lower * (1.0 + kFeasibilityMargin);
  return terms;
}

// Stationarity solution of the separable fixed-budget subproblem, clipped to
// the box: q_n = (d_n + sqrt(A M d_n / (lambda c_n))) / (N B).
Eigen::VectorXd probs_at_multiplier(const SubproblemTerms& terms, double a_const, double budget,
                                    double lambda) {
  Eigen::VectorXd q(terms.floor.size());
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const double root =
        std::sqrt(a_const * budget * terms.curvature[i] / (lambda * terms.time_coeff[i]));
    const double raw = (terms.curvature[i] + root) / terms.nb;
    q[i] = std::min(1.0, std::max(terms.floor[i], raw));
  }
  return q;
}

// Solves sum c_n q_n(lambda) = budget by bisection on log lambda. Returns
// nullopt when the budget is outside the attainable window.
std::optional<Eigen::VectorXd> solve_fixed_budget(const SubproblemTerms& terms, double a_const,
                                                  double budget) {
  const double lo_budget = terms.time_coeff.dot(terms.floor);
  const double hi_budget = terms.time_coeff.sum();
  if (budget < lo_budget - 1e-12 * std::max(1.0, lo_budget) ||
      budget > hi_budget + 1e-12 * std::max(1.0, hi_budget)) {
    return std::nullopt;
  }

  double log_lo = -690.0;  // q clipped to 1 everywhere
  double log_hi = 690.0;   // q clipped to the floors everywhere
  Eigen::VectorXd q = terms.floor;
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (log_lo + log_hi);
    q = probs_at_multiplier(terms, a_const, budget, std::exp(mid));
    const double spent = terms.time_coeff.dot(q);
    if (spent > budget) {
      log_lo = mid;
    } else {
      log_hi = mid;
    }
    if (std::abs(spent - budget) <= 1e-13 * std::max(1.0, budget)) break;
  }
  return q;
}

}  // namespace

QSolution solve_q_given_k(const Eigen::VectorXi& ratios, const ConvergenceConstants& constants,
                          const std::vector<ClientProfile>& profiles, double total_bandwidth,
                          int rank, double grid_step) {
  constants.validate();
  validate_profiles(profiles);
  if (!(total_bandwidth > 0.0)) throw ConfigError("solve_q_given_k: bandwidth must be positive");
  if (static_cast<std::size_t>(ratios.size()) != profiles.size()) {
    throw DimensionError("solve_q_given_k: one ratio per client required");
  }

  const SubproblemTerms terms = make_terms(ratios, constants, profiles, total_bandwidth, rank);
  const auto n = static_cast<Eigen::Index>(profiles.size());

  // Paper grid endpoints, extended down to the feasible floor so the
  // time-dominated corner stays reachable.
  double full_cost_min = std::numeric_limits<double>::infinity();
  int ratio_min = rank;
  int ratio_max = 1;
  for (Eigen::Index i = 0; i < n; ++i) {
    full_cost_min = std::min(full_cost_min,
                             profiles[static_cast<std::size_t>(i)].t_full / total_bandwidth +
                                 profiles[static_cast<std::size_t>(i)].tau_full);
    ratio_min = std::min(ratio_min, ratios[i]);
    ratio_max = std::max(ratio_max, ratios[i]);
  }
  double full_cost_max = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    full_cost_max = std::max(full_cost_max,
                             profiles[static_cast<std::size_t>(i)].t_full / total_bandwidth +
                                 profiles[static_cast<std::size_t>(i)].tau_full);
  }
  const double ratio_span = static_cast<double>(ratio_min) / ratio_max;
  const double floor_budget = terms.time_coeff.dot(terms.floor);
  const double grid_lo =
      std::min(static_cast<double>(n) * ratio_span * ratio_span * full_cost_min, floor_budget);
  const double grid_hi = static_cast<double>(n) * full_cost_max;
  const double step = grid_step > 0.0 ? grid_step : (grid_hi - grid_lo) / 200.0;

  std::vector<double> budgets;
  for (double m = grid_lo; m < grid_hi; m += step) budgets.push_back(m);
  budgets.push_back(grid_hi);
  // The window endpoints themselves, so tight feasibility cannot fall
  // between grid points.
  budgets.push_back(floor_budget);
  budgets.push_back(terms.time_coeff.sum());
  std::sort(budgets.begin(), budgets.end());

  std::optional<QSolution> best;
  for (const double budget : budgets) {
    const std::optional<Eigen::VectorXd> q = solve_fixed_budget(terms, constants.A, budget);
    if (!q) continue;
    const Plan candidate(*q, ratios, rank);
    const std::optional<double> objective =
        p2_objective(candidate, constants, profiles, total_bandwidth);
    if (!objective) continue;
    if (!best || *objective < best->objective) {
      best = QSolution{*q, *objective, budget};
    }
  }
  if (!best) {
    throw PlanInfeasible("no sampling probabilities satisfy the convergence constraints");
  }
  return *best;
}

Eigen::VectorXi greedy_sketch_ratios(const Eigen::VectorXd& probs,
                                     const ConvergenceConstants& constants,
                                     const std::vector<ClientProfile>& profiles,
                                     double total_bandwidth, int rank) {
  constants.validate();
  validate_profiles(profiles);
  const auto n = static_cast<Eigen::Index>(profiles.size());
  if (probs.size() != n) throw DimensionError("greedy_sketch_ratios: one probability per client");
  if (rank < 1) throw InvalidSketchRatio("greedy_sketch_ratios: rank must be positive");
  const Eigen::VectorXd weights = profile_weights(profiles);

  Eigen::VectorXi ratios = Eigen::VectorXi::Constant(n, rank);
  const std::optional<double> start =
      p2_objective(Plan(probs, ratios, rank), constants, profiles, total_bandwidth);
  if (!start) {
    throw PlanInfeasible("given probabilities lie outside the convergence region");
  }
  double current = *start;

  bool moved = true;
  while (moved) {
    moved = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (ratios[i] <= 1) continue;
      Eigen::VectorXi candidate = ratios;
      candidate[i] -= 1;
      const FeasibilityBounds bounds{feasibility_lower(weights, candidate, constants, rank)};
      if (!bounds.admits(probs)) continue;
      const std::optional<double> objective =
          p2_objective(Plan(probs, candidate, rank), constants, profiles, total_bandwidth);
      if (!objective || !(*objective < current)) continue;
      ratios = candidate;
      current = *objective;
      moved = true;
    }
  }
  return ratios;
}

AlternationResult alternate(const std::vector<ClientProfile>& profiles,
                            const ConvergenceConstants& constants, double total_bandwidth,
                            int rank, double grid_step, int max_iters) {
  if (max_iters < 1) throw ConfigError("alternate: max_iters must be positive");
  const auto n = static_cast<Eigen::Index>(profiles.size());

  Eigen::VectorXi ratios = Eigen::VectorXi::Constant(n, rank);
  QSolution qsol = solve_q_given_k(ratios, constants, profiles, total_bandwidth, rank, grid_step);

  AlternationResult result{Plan(qsol.probs, ratios, rank), qsol.objective, {qsol.objective}, 1};

  for (int iter = 1; iter < max_iters; ++iter) {
    const Eigen::VectorXi next_ratios =
        greedy_sketch_ratios(qsol.probs, constants, profiles, total_bandwidth, rank);
    const QSolution next_q =
        solve_q_given_k(next_ratios, constants, profiles, total_bandwidth, rank, grid_step);

    const double slack = 1e-12 * std::max(1.0, std::abs(result.trace.back()));
    if (next_q.objective > result.trace.back() + slack) break;

    result.trace.push_back(next_q.objective);
    result.iterations = iter + 1;
    if (next_q.objective < result.objective) {
      result.plan = Plan(next_q.probs, next_ratios, rank);
      result.objective = next_q.objective;
    }

    const bool ratios_fixed = (next_ratios == ratios);
    const bool probs_fixed = (next_q.probs - qsol.probs).cwiseAbs().maxCoeff() < 1e-4;
    ratios = next_ratios;
    qsol = next_q;
    if (ratios_fixed && probs_fixed) break;
  }
  return result;
}

}  // namespace fedlora
