// SPDX-License-Identifier: Apache-2.0
#include "fedlora/protocol.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace fedlora {

ParticipationDraw draw_participants(const Plan& plan, Rng& rng, int round) {
  ParticipationDraw draw;
  draw.round = round;
  draw.indicators.resize(static_cast<std::size_t>(plan.clients()));
  for (int n = 0; n < plan.clients(); ++n) {
    draw.indicators[static_cast<std::size_t>(n)] =
        rng.bernoulli(plan.sampling_probs()[n]) ? 1 : 0;
  }
  return draw;
}

ClientDelta local_update(const LoraState& global, const SketchMatrix& sketch,
                         const Dataset& data, int local_iters, double learning_rate,
                         int batch_size, int client, Rng& rng) {
  if (local_iters < 1) throw ConfigError("local_update: local_iters must be positive");
  if (!(learning_rate >= 0.0)) throw ConfigError("local_update: learning rate must be >= 0");
  LoraState local = global;
  for (int h = 0; h < local_iters; ++h) {
    const Batch batch = draw_batch(data, batch_size, rng);
    const LoraGrads grads = lora_grads(local, sketch, batch);
    local.factor_b() -= learning_rate * grads.factor_b;
    local.factor_a() -= learning_rate * grads.factor_a;
  }
  return {global.factor_b() - local.factor_b(), global.factor_a() - local.factor_a(), client};
}

LoraState aggregate(const LoraState& global, const std::vector<ClientDelta>& deltas,
                    const ParticipationDraw& draw, const Plan& plan,
                    const Eigen::VectorXd& weights) {
  const int n = plan.clients();
  if (static_cast<int>(draw.indicators.size()) != n || weights.size() != n) {
    throw DimensionError("aggregate: draw, plan and weights must cover the same clients");
  }
  const double weight_total = weights.sum();
  if (std::abs(weight_total - 1.0) > 1e-9) {
    throw ProtocolViolation("aggregate: client weights must sum to 1");
  }

  std::vector<const ClientDelta*> by_client(static_cast<std::size_t>(n), nullptr);
  for (const ClientDelta& d : deltas) {
    if (d.client < 0 || d.client >= n) {
      throw ProtocolViolation("aggregate: delta from unknown client " + std::to_string(d.client));
    }
    if (!draw.participated(d.client)) {
      throw ProtocolViolation("aggregate: delta from non-participant client " +
                              std::to_string(d.client));
    }
    if (by_client[static_cast<std::size_t>(d.client)] != nullptr) {
      throw ProtocolViolation("aggregate: duplicate delta from client " +
                              std::to_string(d.client));
    }
    if (d.delta_b.rows() != global.out_dim() || d.delta_b.cols() != global.rank() ||
        d.delta_a.rows() != global.rank() || d.delta_a.cols() != global.in_dim()) {
      throw DimensionError("aggregate: delta shape mismatch from client " +
                           std::to_string(d.client));
    }
    by_client[static_cast<std::size_t>(d.client)] = &d;
  }
  for (int c = 0; c < n; ++c) {
    if (draw.participated(c) && by_client[static_cast<std::size_t>(c)] == nullptr) {
      throw ProtocolViolation("aggregate: missing delta from participant " + std::to_string(c));
    }
  }

  LoraState next = global;
  for (int c = 0; c < n; ++c) {
    const ClientDelta* d = by_client[static_cast<std::size_t>(c)];
    if (d == nullptr) continue;
    const double coeff = weights[c] / plan.sampling_probs()[c];
    next.factor_b() -= coeff * d->delta_b;
    next.factor_a() -= coeff * d->delta_a;
  }
  return next;
}

RoundResult run_round(const LoraState& state, const Plan& plan,
                      const std::vector<Dataset>& client_data,
                      const std::vector<ClientProfile>& profiles, const SystemConfig& system,
                      int batch_size, int round, std::uint64_t run_seed, const Batch& eval_set,
                      double elapsed_before) {
  const int n = plan.clients();
  if (static_cast<int>(client_data.size()) != n || static_cast<int>(profiles.size()) != n) {
    throw DimensionError("run_round: plan, datasets and profiles must cover the same clients");
  }

  Rng participation_rng(derive_seed(run_seed, stream::kParticipation,
                                    static_cast<std::uint64_t>(round)));
  const ParticipationDraw draw = draw_participants(plan, participation_rng, round);
  const std::vector<int> participants = draw.participants();

  std::vector<ClientDelta> deltas;
  deltas.reserve(participants.size());
  for (const int c : participants) {
    Rng sketch_rng(derive_seed(run_seed, stream::kSketch, static_cast<std::uint64_t>(round),
                               static_cast<std::uint64_t>(c)));
    const SketchMatrix sketch =
        sample_sketch(system.rank, plan.sketch_ratios()[c], sketch_rng);
    Rng batch_rng(derive_seed(run_seed, stream::kBatch, static_cast<std::uint64_t>(round),
                              static_cast<std::uint64_t>(c)));
    deltas.push_back(local_update(state, sketch, client_data[static_cast<std::size_t>(c)],
                                  system.local_iters, system.learning_rate, batch_size, c,
                                  batch_rng));
  }

  LoraState next = aggregate(state, deltas, draw, plan, profile_weights(profiles));

  double duration = 0.0;
  if (!participants.empty()) {
    Eigen::VectorXd taus(static_cast<Eigen::Index>(participants.size()));
    Eigen::VectorXd uploads(static_cast<Eigen::Index>(participants.size()));
    for (std::size_t i = 0; i < participants.size(); ++i) {
      const int c = participants[i];
      const ScaledTimes s = scale_times(profiles[static_cast<std::size_t>(c)],
                                        plan.sketch_ratios()[c], system.rank);
      taus[static_cast<Eigen::Index>(i)] = s.tau;
      uploads[static_cast<Eigen::Index>(i)] = s.t;
    }
    duration = realized_round_time(taus, uploads, system.total_bandwidth).duration;
  }

  const EvalMetrics metrics = evaluate(next, eval_set);
  RoundRecord record{round,
                     participants,
                     duration,
                     elapsed_before + duration,
                     metrics.loss,
                     {{"accuracy", metrics.accuracy}}};
  return {std::move(next), std::move(record)};
}

}  // namespace fedlora
