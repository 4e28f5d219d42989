// SPDX-License-Identifier: Apache-2.0
#include "fedlora/wireless.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fedlora {

void validate_profiles(const std::vector<ClientProfile>& profiles) {
  if (profiles.empty()) throw ConfigError("profiles: need at least one client");
  double total = 0.0;
  for (const auto& p : profiles) {
    if (!(p.weight > 0.0) || !(p.tau_full > 0.0) || !(p.t_full > 0.0)) {
      throw ConfigError("profiles: weight, tau_full and t_full must be positive");
    }
    total += p.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("profiles: weights must sum to 1");
  }
}

Eigen::VectorXd profile_weights(const std::vector<ClientProfile>& profiles) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(profiles.size()));
  for (std::size_t n = 0; n < profiles.size(); ++n) w[static_cast<Eigen::Index>(n)] = profiles[n].weight;
  return w;
}

void validate_system(const SystemConfig& system) {
  if (!(system.total_bandwidth > 0.0)) throw ConfigError("total_bandwidth must be positive");
  if (system.clients < 1) throw ConfigError("need at least one client");
  if (system.rank < 1) throw ConfigError("rank must be positive");
  if (system.local_iters < 1) throw ConfigError("local_iters must be positive");
  if (!(system.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
}

ScaledTimes scale_times(const ClientProfile& profile, int k, int rank) {
  if (rank < 1 || k < 1 || k > rank) {
    throw InvalidSketchRatio("scale_times: ratio must be in [1, rank]");
  }
  const double f = static_cast<double>(k) / static_cast<double>(rank);
  return {profile.tau_full * f * f, profile.t_full * f * f};
}

RoundTime realized_round_time(const Eigen::VectorXd& taus, const Eigen::VectorXd& uploads,
                              double total_bandwidth) {
  const Eigen::Index n = taus.size();
  if (n == 0) throw DimensionError("realized_round_time: empty participant set");
  if (uploads.size() != n) {
    throw DimensionError("realized_round_time: one upload time per participant");
  }
  if (!(total_bandwidth > 0.0)) {
    throw ConfigError("realized_round_time: bandwidth must be positive");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(taus[i] >= 0.0) || !(uploads[i] > 0.0)) {
      throw ConfigError("realized_round_time: need tau >= 0 and upload > 0");
    }
  }

  const double tau_max = taus.maxCoeff();
  const auto demand = [&](double t) {
    return (uploads.array() / (t - taus.array())).sum();
  };

  // demand(T) decreases from +inf at tau_max to 0; the root is bracketed by
  // tau_max and the serial-upload bound.
  double lo = tau_max;
  double hi = tau_max + uploads.sum() / total_bandwidth;
  for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (demand(mid) > total_bandwidth) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double t = hi;
  // Newton polish; demand is smooth and monotone on (tau_max, inf).
  for (int it = 0; it < 4; ++it) {
    const double d = demand(t);
    const double slope = -(uploads.array() / (t - taus.array()).square()).sum();
    const double step = (d - total_bandwidth) / slope;
    const double next = t - step;
    if (!(next > tau_max)) break;
    t = next;
  }

  Eigen::VectorXd widths = uploads.array() / (t - taus.array());
  return {t, std::move(widths)};
}

double expected_max_compute_time(const Eigen::VectorXd& probs, const Eigen::VectorXd& taus) {
  const Eigen::Index n = probs.size();
  if (taus.size() != n) throw DimensionError("expected_max_compute_time: size mismatch");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(probs[i] >= 0.0 && probs[i] <= 1.0)) {
      throw DimensionError("expected_max_compute_time: probabilities must lie in [0, 1]");
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return taus[a] < taus[b]; });

  // Sum over clients, descending tau: P(client is the slowest participant)
  // times its tau. The running product tracks "no slower client joined".
  double expect = 0.0;
  double none_slower = 1.0;
  for (Eigen::Index pos = n - 1; pos >= 0; --pos) {
    const Eigen::Index c = order[static_cast<std::size_t>(pos)];
    expect += none_slower * probs[c] * taus[c];
    none_slower *= 1.0 - probs[c];
  }
  return expect;
}

namespace {

void check_plan_profiles(const Plan& plan, const std::vector<ClientProfile>& profiles,
                         double total_bandwidth) {
  if (static_cast<std::size_t>(plan.clients()) != profiles.size()) {
    throw DimensionError("plan and profiles disagree on the client count");
  }
  if (!(total_bandwidth > 0.0)) throw ConfigError("bandwidth must be positive");
}

}  // namespace

double expected_round_time_bound(const Plan& plan, const std::vector<ClientProfile>& profiles,
                                 double total_bandwidth) {
  check_plan_profiles(plan, profiles, total_bandwidth);
  double total = 0.0;
  for (int n = 0; n < plan.clients(); ++n) {
    const double f = static_cast<double>(plan.sketch_ratios()[n]) / plan.rank();
    total += f * f * plan.sampling_probs()[n] *
             (profiles[static_cast<std::size_t>(n)].t_full / total_bandwidth +
              profiles[static_cast<std::size_t>(n)].tau_full);
  }
  return total;
}

double expected_round_time_bound_tight(const Plan& plan,
                                       const std::vector<ClientProfile>& profiles,
                                       double total_bandwidth) {
  check_plan_profiles(plan, profiles, total_bandwidth);
  const int n = plan.clients();
  Eigen::VectorXd taus(n);
  double upload_term = 0.0;
  for (int i = 0; i < n; ++i) {
    const ScaledTimes s =
        scale_times(profiles[static_cast<std::size_t>(i)], plan.sketch_ratios()[i], plan.rank());
    taus[i] = s.tau;
    upload_term += plan.sampling_probs()[i] * s.t / total_bandwidth;
  }
  return upload_term + expected_max_compute_time(plan.sampling_probs(), taus);
}

}  // namespace fedlora
