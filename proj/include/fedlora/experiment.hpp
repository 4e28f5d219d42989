// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fedlora/data.hpp"
#include "fedlora/errors.hpp"
#include "fedlora/plan.hpp"
#include "fedlora/planner.hpp"
#include "fedlora/protocol.hpp"
#include "fedlora/rng.hpp"
#include "fedlora/wireless.hpp"

namespace fedlora {

enum class SamplingStrategy { kOptimized, kFull, kFixed, kUniform, kWeighted };
enum class RankStrategy { kOptimized, kFullRank, kNormalRank, kUniformRank };

std::string to_string(SamplingStrategy s);
std::string to_string(RankStrategy s);
SamplingStrategy parse_sampling_strategy(const std::string& name);
RankStrategy parse_rank_strategy(const std::string& name);

struct StrategySpec {
  SamplingStrategy sampling = SamplingStrategy::kOptimized;
  RankStrategy rank = RankStrategy::kOptimized;
  double fixed_prob = 0.2;    // for fixed sampling
  double normal_mean = 0.0;   // for normal-rank; 0 picks rank/2
  double normal_stddev = 0.0; // for normal-rank; 0 picks rank/4

  std::string label() const { return to_string(sampling) + ":" + to_string(rank); }
  bool needs_planner() const {
    return sampling == SamplingStrategy::kOptimized || rank == RankStrategy::kOptimized;
  }
};

// "fixed:normal-rank" or just "fixed" (rank part defaults to full-rank for
// baselines, optimized-k for optimized sampling).
StrategySpec parse_strategy(const std::string& text);

struct ProfileRanges {
  double tau_lo = 1.0;
  double tau_hi = 200.0;
  double t_lo = 0.5;
  double t_hi = 4.0;
};

struct ProbeSpec {
  double prob;
  int ratio;
};

struct PlannerSettings {
  int warmup_rounds = 5;           // defines the estimation loss level
  int probe_round_cap = 2000;
  double grid_step = 0.0;          // 0 means span/200
  int max_outer_iters = 20;
  std::vector<ProbeSpec> probes;   // empty means the four defaults for the rank
};

std::vector<ProbeSpec> default_probes(int rank);

struct ExperimentConfig {
  std::uint64_t seed = 8;
  int clients = 50;
  int rank = 8;
  int local_iters = 10;
  double learning_rate = 0.024;
  int batch_size = 3;
  int pretrain_steps = 2;            // SGD steps on the dense base before adapters attach
  double pretrain_learning_rate = 0.05;
  int pretrain_batch = 64;
  double dirichlet_alpha = 0.1;
  double total_bandwidth = 100.0;
  double eval_fraction = 0.1;
  int round_cap = 2000;
  std::optional<double> target_loss = 0.23;
  std::optional<double> target_accuracy;
  MixtureSpec dataset;
  ProfileRanges profile_ranges;
  PlannerSettings planner;
  StrategySpec strategy;

  void validate() const;
  SystemConfig system() const {
    return {total_bandwidth, clients, rank, local_iters, learning_rate};
  }
};

// Everything the strategies share: data, its partition, client profiles and
// the initial model, all derived from the config seed alone.
struct ExperimentWorld {
  Dataset train;
  Dataset eval_split;
  std::vector<Dataset> client_data;
  std::vector<ClientProfile> profiles;
  LoraState initial;
  Batch eval_batch;
};

ExperimentWorld build_world(const ExperimentConfig& config);

// Baseline components per the comparison suite. The rank draws consume
// `rng`; the probability vectors are deterministic.
Eigen::VectorXd baseline_sampling_probs(const StrategySpec& strategy,
                                        const Eigen::VectorXd& weights);
Eigen::VectorXi baseline_sketch_ratios(const StrategySpec& strategy, int clients, int rank,
                                       Rng& rng);

// Both components must be non-optimized.
Plan make_baseline_plan(const StrategySpec& strategy, const std::vector<ClientProfile>& profiles,
                        int rank, Rng& rng);

struct ProbeRun {
  ProbeSpec spec;
  double rounds;
  double y;
  double z;
};

struct EstimationResult {
  ConvergenceConstants constants;
  double reference_loss;                // loss level the probes race to
  std::array<ProbeRun, 4> probes;
  std::vector<RoundRecord> records;     // warmup then probe rounds, in order
  double elapsed;                       // simulated seconds spent estimating
};

// Warmup run fixes the reference loss, four probe runs measure rounds to
// reach it, and the stacked observations give the constants.
EstimationResult run_estimation(const ExperimentWorld& world, const ExperimentConfig& config);

struct RunReport {
  std::string strategy;
  std::uint64_t seed = 0;
  Plan plan;
  std::optional<ConvergenceConstants> constants;
  std::optional<double> wall_clock_to_target;
  std::vector<RoundRecord> records;
};

bool operator==(const RoundRecord& a, const RoundRecord& b);
bool operator==(const RunReport& a, const RunReport& b);

RunReport run_experiment(const ExperimentConfig& config);

}  // namespace fedlora
