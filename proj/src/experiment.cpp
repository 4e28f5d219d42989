// SPDX-License-Identifier: Apache-2.0
#include "fedlora/experiment.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace fedlora {

std::string to_string(SamplingStrategy s) {
  switch (s) {
    case SamplingStrategy::kOptimized: return "optimized";
    case SamplingStrategy::kFull: return "full";
    case SamplingStrategy::kFixed: return "fixed";
    case SamplingStrategy::kUniform: return "uniform";
    case SamplingStrategy::kWeighted: return "weighted";
  }
  throw ConfigError("unknown sampling strategy value");
}

std::string to_string(RankStrategy s) {
  switch (s) {
    case RankStrategy::kOptimized: return "optimized-k";
    case RankStrategy::kFullRank: return "full-rank";
    case RankStrategy::kNormalRank: return "normal-rank";
    case RankStrategy::kUniformRank: return "uniform-rank";
  }
  throw ConfigError("unknown rank strategy value");
}

SamplingStrategy parse_sampling_strategy(const std::string& name) {
  if (name == "optimized") return SamplingStrategy::kOptimized;
  if (name == "full") return SamplingStrategy::kFull;
  if (name == "fixed") return SamplingStrategy::kFixed;
  if (name == "uniform") return SamplingStrategy::kUniform;
  if (name == "weighted") return SamplingStrategy::kWeighted;
  throw ConfigError("unknown sampling strategy '" + name +
                    "'; expected optimized|full|fixed|uniform|weighted");
}

RankStrategy parse_rank_strategy(const std::string& name) {
  if (name == "optimized-k") return RankStrategy::kOptimized;
  if (name == "full-rank") return RankStrategy::kFullRank;
  if (name == "normal-rank") return RankStrategy::kNormalRank;
  if (name == "uniform-rank") return RankStrategy::kUniformRank;
  throw ConfigError("unknown rank strategy '" + name +
                    "'; expected optimized-k|full-rank|normal-rank|uniform-rank");
}

StrategySpec parse_strategy(const std::string& text) {
  StrategySpec spec;
  const auto colon = text.find(':');
  const std::string head = colon == std::string::npos ? text : text.substr(0, colon);
  spec.sampling = parse_sampling_strategy(head);
  if (colon != std::string::npos) {
    spec.rank = parse_rank_strategy(text.substr(colon + 1));
  } else {
    spec.rank = spec.sampling == SamplingStrategy::kOptimized ? RankStrategy::kOptimized
                                                              : RankStrategy::kFullRank;
  }
  return spec;
}

std::vector<ProbeSpec> default_probes(int rank) {
  return {{0.3, rank}, {0.8, rank}, {0.5, (rank + 1) / 2}, {0.9, (rank + 3) / 4}};
}

void ExperimentConfig::validate() const {
  if (clients < 1) throw ConfigError("clients must be positive");
  if (rank < 1) throw ConfigError("rank must be positive");
  if (local_iters < 1) throw ConfigError("local_iters must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (pretrain_steps < 0) throw ConfigError("pretrain_steps must be nonnegative");
  if (pretrain_steps > 0 && !(pretrain_learning_rate > 0.0)) {
    throw ConfigError("pretrain_learning_rate must be positive");
  }
  if (pretrain_batch < 1) throw ConfigError("pretrain_batch must be positive");
  if (!(dirichlet_alpha > 0.0)) throw ConfigError("dirichlet_alpha must be positive");
  if (!(total_bandwidth > 0.0)) throw ConfigError("total_bandwidth must be positive");
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) {
    throw ConfigError("eval_fraction must lie in (0, 1)");
  }
  if (round_cap < 0) throw ConfigError("round_cap must be nonnegative");
  if (target_loss.has_value() == target_accuracy.has_value()) {
    throw ConfigError("exactly one of target_loss and target_accuracy must be set");
  }
  if (target_accuracy && !(*target_accuracy > 0.0 && *target_accuracy <= 1.0)) {
    throw ConfigError("target_accuracy must lie in (0, 1]");
  }
  if (!(profile_ranges.tau_lo > 0.0 && profile_ranges.tau_hi >= profile_ranges.tau_lo)) {
    throw ConfigError("compute-time range must satisfy 0 < lo <= hi");
  }
  if (!(profile_ranges.t_lo > 0.0 && profile_ranges.t_hi >= profile_ranges.t_lo)) {
    throw ConfigError("upload-time range must satisfy 0 < lo <= hi");
  }
  if (strategy.sampling == SamplingStrategy::kFixed &&
      !(strategy.fixed_prob > 0.0 && strategy.fixed_prob <= 1.0)) {
    throw ConfigError("fixed sampling probability must lie in (0, 1]");
  }
  if (planner.warmup_rounds < 1) throw ConfigError("warmup_rounds must be positive");
  if (planner.probe_round_cap < 1) throw ConfigError("probe_round_cap must be positive");
  if (planner.max_outer_iters < 1) throw ConfigError("max_outer_iters must be positive");
  if (!planner.probes.empty() && planner.probes.size() != 4) {
    throw ConfigError("exactly four probe configurations are required");
  }
  for (const ProbeSpec& p : planner.probes) {
    if (!(p.prob > 0.0 && p.prob <= 1.0) || p.ratio < 1 || p.ratio > rank) {
      throw ConfigError("probe configurations must satisfy 0 < q <= 1 and 1 <= k <= rank");
    }
  }
  if (dataset.classes < 2 || dataset.features < 1 || dataset.samples < dataset.classes) {
    throw ConfigError("dataset spec must have >= 2 classes and >= 1 sample per class");
  }
}

ExperimentWorld build_world(const ExperimentConfig& config) {
  config.validate();

  Rng data_rng(derive_seed(config.seed, stream::kDataset));
  const Dataset full = make_gaussian_mixture(config.dataset, data_rng);

  Rng split_rng(derive_seed(config.seed, stream::kSplit));
  auto [train, eval_split] = split_dataset(full, config.eval_fraction, split_rng);

  Rng partition_rng(derive_seed(config.seed, stream::kPartition));
  std::vector<Dataset> client_data =
      dirichlet_partition(train, config.clients, config.dirichlet_alpha, partition_rng);
  const Eigen::VectorXd weights = data_weights(client_data);

  Rng profile_rng(derive_seed(config.seed, stream::kProfiles));
  std::vector<ClientProfile> profiles;
  profiles.reserve(static_cast<std::size_t>(config.clients));
  for (int n = 0; n < config.clients; ++n) {
    ClientProfile p;
    p.weight = weights[n];
    p.tau_full = profile_rng.log_uniform(config.profile_ranges.tau_lo, config.profile_ranges.tau_hi);
    p.t_full = profile_rng.log_uniform(config.profile_ranges.t_lo, config.profile_ranges.t_hi);
    profiles.push_back(p);
  }
  validate_profiles(profiles);

  Rng init_rng(derive_seed(config.seed, stream::kInit));
  Eigen::MatrixXd frozen(config.dataset.classes, config.dataset.features);
  for (Eigen::Index i = 0; i < frozen.rows(); ++i) {
    for (Eigen::Index j = 0; j < frozen.cols(); ++j) frozen(i, j) = 0.1 * init_rng.normal();
  }
  for (int s = 0; s < config.pretrain_steps; ++s) {
    const Batch batch = draw_batch(train, config.pretrain_batch, init_rng);
    Eigen::MatrixXd dlogits;
    detail::softmax_xent(batch.inputs * frozen.transpose(), batch.targets, &dlogits);
    frozen -= config.pretrain_learning_rate * (dlogits.transpose() * batch.inputs);
  }
  LoraState initial = make_lora_state(std::move(frozen), config.rank, init_rng);

  Batch eval_batch = as_batch(eval_split);
  return {std::move(train), std::move(eval_split), std::move(client_data), std::move(profiles),
          std::move(initial), std::move(eval_batch)};
}

Eigen::VectorXd baseline_sampling_probs(const StrategySpec& strategy,
                                        const Eigen::VectorXd& weights) {
  const Eigen::Index n = weights.size();
  switch (strategy.sampling) {
    case SamplingStrategy::kFull:
      return Eigen::VectorXd::Ones(n);
    case SamplingStrategy::kFixed:
      return Eigen::VectorXd::Constant(n, strategy.fixed_prob);
    case SamplingStrategy::kUniform:
      return Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    case SamplingStrategy::kWeighted:
      return weights;
    case SamplingStrategy::kOptimized:
      break;
  }
  throw std::logic_error("baseline_sampling_probs called for the optimized strategy");
}

Eigen::VectorXi baseline_sketch_ratios(const StrategySpec& strategy, int clients, int rank,
                                       Rng& rng) {
  Eigen::VectorXi ratios(clients);
  switch (strategy.rank) {
    case RankStrategy::kFullRank:
      ratios.setConstant(rank);
      return ratios;
    case RankStrategy::kNormalRank: {
      const double mean = strategy.normal_mean > 0.0 ? strategy.normal_mean : rank / 2.0;
      const double stddev = strategy.normal_stddev > 0.0 ? strategy.normal_stddev : rank / 4.0;
      for (int n = 0; n < clients; ++n) {
        const auto k = static_cast<int>(std::llround(rng.normal(mean, stddev)));
        ratios[n] = std::min(rank, std::max(1, k));
      }
      return ratios;
    }
    case RankStrategy::kUniformRank:
      for (int n = 0; n < clients; ++n) {
        const auto k = static_cast<int>(std::llround(rng.uniform(0.0, static_cast<double>(rank))));
        ratios[n] = std::min(rank, std::max(1, k));
      }
      return ratios;
    case RankStrategy::kOptimized:
      break;
  }
  throw std::logic_error("baseline_sketch_ratios called for the optimized strategy");
}

Plan make_baseline_plan(const StrategySpec& strategy, const std::vector<ClientProfile>& profiles,
                        int rank, Rng& rng) {
  if (strategy.needs_planner()) {
    throw std::logic_error("make_baseline_plan requires non-optimized strategy components");
  }
  const Eigen::VectorXd weights = profile_weights(profiles);
  return Plan(baseline_sampling_probs(strategy, weights),
              baseline_sketch_ratios(strategy, static_cast<int>(profiles.size()), rank, rng),
              rank);
}

namespace {

// Run ids feeding the per-run seed derivation.
constexpr std::uint64_t kMainRunId = 0;
constexpr std::uint64_t kWarmupRunId = 1;
constexpr std::uint64_t kProbeRunIdBase = 2;

bool meets_target(const ExperimentConfig& config, const RoundRecord& record) {
  if (config.target_loss) return record.global_loss <= *config.target_loss;
  return record.eval_metrics.at("accuracy") >= *config.target_accuracy;
}

}  // namespace

EstimationResult run_estimation(const ExperimentWorld& world, const ExperimentConfig& config) {
  const SystemConfig system = config.system();
  const Eigen::VectorXd weights = profile_weights(world.profiles);
  const Eigen::Index n = weights.size();

  std::vector<RoundRecord> records;
  double elapsed = 0.0;

  // Warmup at full participation and full rank pins the loss level the
  // probes race toward.
  const Plan full_plan(Eigen::VectorXd::Ones(n), Eigen::VectorXi::Constant(n, config.rank),
                       config.rank);
  const std::uint64_t warmup_seed = derive_seed(config.seed, stream::kRun, kWarmupRunId);
  LoraState state = world.initial;
  for (int r = 0; r < config.planner.warmup_rounds; ++r) {
    RoundResult result = run_round(state, full_plan, world.client_data, world.profiles, system,
                                   config.batch_size, r, warmup_seed, world.eval_batch, elapsed);
    state = std::move(result.state);
    elapsed = result.record.cumulative_time;
    records.push_back(std::move(result.record));
  }
  const double reference_loss = records.back().global_loss;

  const std::vector<ProbeSpec> probes =
      config.planner.probes.empty() ? default_probes(config.rank) : config.planner.probes;

  std::array<ProbeRun, 4> probe_runs;
  std::array<ProbeObservation, 4> observations;
  for (std::size_t i = 0; i < 4; ++i) {
    const ProbeSpec& probe = probes[i];
    const Plan probe_plan(Eigen::VectorXd::Constant(n, probe.prob),
                          Eigen::VectorXi::Constant(n, probe.ratio), config.rank);
    const std::uint64_t probe_seed =
        derive_seed(config.seed, stream::kRun, kProbeRunIdBase + i);

    LoraState probe_state = world.initial;
    int rounds = 0;
    bool reached = false;
    for (int r = 0; r < config.planner.probe_round_cap; ++r) {
      RoundResult result =
          run_round(probe_state, probe_plan, world.client_data, world.profiles, system,
                    config.batch_size, r, probe_seed, world.eval_batch, elapsed);
      probe_state = std::move(result.state);
      elapsed = result.record.cumulative_time;
      rounds = r + 1;
      const bool done = result.record.global_loss <= reference_loss;
      records.push_back(std::move(result.record));
      if (done) {
        reached = true;
        break;
      }
    }
    if (!reached) {
      throw ConfigError("estimation probe " + std::to_string(i) +
                        " did not reach the reference loss within the probe round cap");
    }
    const double y = sampling_load(weights, probe_plan.sampling_probs());
    const double z =
        sketch_load(weights, probe_plan.sampling_probs(), probe_plan.sketch_ratios(), config.rank);
    probe_runs[i] = {probe, static_cast<double>(rounds), y, z};
    observations[i] = {static_cast<double>(rounds), y, z};
  }

  return {estimate_constants(observations), reference_loss, probe_runs, std::move(records),
          elapsed};
}

bool operator==(const RoundRecord& a, const RoundRecord& b) {
  return a.round == b.round && a.participants == b.participants &&
         a.round_time == b.round_time && a.cumulative_time == b.cumulative_time &&
         a.global_loss == b.global_loss && a.eval_metrics == b.eval_metrics;
}

bool operator==(const RunReport& a, const RunReport& b) {
  const bool plan_equal = a.plan.rank() == b.plan.rank() &&
                          a.plan.sampling_probs() == b.plan.sampling_probs() &&
                          a.plan.sketch_ratios() == b.plan.sketch_ratios();
  const bool constants_equal =
      a.constants.has_value() == b.constants.has_value() &&
      (!a.constants || (a.constants->A == b.constants->A && a.constants->B == b.constants->B &&
                        a.constants->C == b.constants->C && a.constants->D == b.constants->D));
  return a.strategy == b.strategy && a.seed == b.seed && plan_equal && constants_equal &&
         a.wall_clock_to_target == b.wall_clock_to_target && a.records == b.records;
}

RunReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const ExperimentWorld world = build_world(config);
  const SystemConfig system = config.system();
  const Eigen::VectorXd weights = profile_weights(world.profiles);

  std::vector<RoundRecord> records;
  double elapsed = 0.0;
  std::optional<ConvergenceConstants> constants;

  const StrategySpec& strategy = config.strategy;
  std::optional<Plan> plan;
  if (strategy.needs_planner()) {
    EstimationResult estimation = run_estimation(world, config);
    constants = estimation.constants;
    records = std::move(estimation.records);
    elapsed = estimation.elapsed;

    if (strategy.sampling == SamplingStrategy::kOptimized &&
        strategy.rank == RankStrategy::kOptimized) {
      AlternationResult alt =
          alternate(world.profiles, *constants, config.total_bandwidth, config.rank,
                    config.planner.grid_step, config.planner.max_outer_iters);
      plan = alt.plan;
    } else if (strategy.sampling == SamplingStrategy::kOptimized) {
      Rng baseline_rng(derive_seed(config.seed, stream::kBaseline));
      const Eigen::VectorXi ratios =
          baseline_sketch_ratios(strategy, config.clients, config.rank, baseline_rng);
      const QSolution q = solve_q_given_k(ratios, *constants, world.profiles,
                                          config.total_bandwidth, config.rank,
                                          config.planner.grid_step);
      plan = Plan(q.probs, ratios, config.rank);
    } else {
      const Eigen::VectorXd probs = baseline_sampling_probs(strategy, weights);
      const Eigen::VectorXi ratios = greedy_sketch_ratios(
          probs, *constants, world.profiles, config.total_bandwidth, config.rank);
      plan = Plan(probs, ratios, config.rank);
    }
  } else {
    Rng baseline_rng(derive_seed(config.seed, stream::kBaseline));
    plan = make_baseline_plan(strategy, world.profiles, config.rank, baseline_rng);
  }

  const std::uint64_t main_seed = derive_seed(config.seed, stream::kRun, kMainRunId);
  LoraState state = world.initial;
  for (int r = 0; r < config.round_cap; ++r) {
    RoundResult result = run_round(state, *plan, world.client_data, world.profiles, system,
                                   config.batch_size, r, main_seed, world.eval_batch, elapsed);
    state = std::move(result.state);
    elapsed = result.record.cumulative_time;
    const bool done = meets_target(config, result.record);
    records.push_back(std::move(result.record));
    if (done) break;
  }

  for (std::size_t i = 0; i < records.size(); ++i) records[i].round = static_cast<int>(i);

  std::optional<double> wall_clock;
  for (const RoundRecord& record : records) {
    if (meets_target(config, record)) {
      wall_clock = record.cumulative_time;
      break;
    }
  }

  return {strategy.label(), config.seed, *plan, constants, wall_clock, std::move(records)};
}

}  // namespace fedlora
