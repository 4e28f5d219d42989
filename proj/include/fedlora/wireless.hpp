// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fedlora/errors.hpp"
#include "fedlora/plan.hpp"

namespace fedlora {

// Full-rank resource profile of one client. `weight` is its share of the
// global data, `tau_full` the local compute seconds at k = rank, `t_full`
// the upload seconds at k = rank under unit bandwidth.
struct ClientProfile {
  double weight;
  double tau_full;
  double t_full;
};

void validate_profiles(const std::vector<ClientProfile>& profiles);

Eigen::VectorXd profile_weights(const std::vector<ClientProfile>& profiles);

struct SystemConfig {
  double total_bandwidth;
  int clients;
  int rank;
  int local_iters;
  double learning_rate;
};

void validate_system(const SystemConfig& system);

struct ScaledTimes {
  double tau;  // compute seconds at ratio k
  double t;    // upload seconds at ratio k, unit bandwidth
};

// Both compute and upload cost shrink quadratically with the sketch ratio.
ScaledTimes scale_times(const ClientProfile& profile, int k, int rank);

struct RoundTime {
  double duration;
  Eigen::VectorXd bandwidths;  // per participant, sums to the total
};

// Round duration when participants share the uplink so that everyone
// finishes together: the unique T > max tau with
// sum_n t_n / (T - tau_n) = total_bandwidth.
RoundTime realized_round_time(const Eigen::VectorXd& taus, const Eigen::VectorXd& uploads,
                              double total_bandwidth);

// E[max of participating compute times] under independent Bernoulli draws.
double expected_max_compute_time(const Eigen::VectorXd& probs, const Eigen::VectorXd& taus);

// Upper bound on the expected round duration in measured parameters:
// sum_n (k_n/rank)^2 q_n (t_full_n / total_bandwidth + tau_full_n).
double expected_round_time_bound(const Plan& plan, const std::vector<ClientProfile>& profiles,
                                 double total_bandwidth);

// Tighter intermediate bound:
// sum_n q_n t_n / total_bandwidth + E[max participating tau].
double expected_round_time_bound_tight(const Plan& plan,
                                       const std::vector<ClientProfile>& profiles,
                                       double total_bandwidth);

// One simulated round as reported to the harness.
struct RoundRecord {
  int round;
  std::vector<int> participants;
  double round_time;
  double cumulative_time;
  double global_loss;
  std::map<std::string, double> eval_metrics;
};

}  // namespace fedlora
