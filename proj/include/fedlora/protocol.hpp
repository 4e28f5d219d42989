// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "fedlora/data.hpp"
#include "fedlora/errors.hpp"
#include "fedlora/lora.hpp"
#include "fedlora/plan.hpp"
#include "fedlora/rng.hpp"
#include "fedlora/sketch.hpp"
#include "fedlora/wireless.hpp"

namespace fedlora {

struct ParticipationDraw {
  std::vector<std::uint8_t> indicators;
  int round = 0;

  bool participated(int n) const { return indicators[static_cast<std::size_t>(n)] != 0; }

  std::vector<int> participants() const {
    std::vector<int> out;
    for (std::size_t n = 0; n < indicators.size(); ++n) {
      if (indicators[n]) out.push_back(static_cast<int>(n));
    }
    return out;
  }
};

// Independent Bernoulli(q_n) coin per client, in client-index order.
ParticipationDraw draw_participants(const Plan& plan, Rng& rng, int round = 0);

// start - end of the local factors after H sketched SGD steps; the learning
// rate is already inside.
struct ClientDelta {
  Eigen::MatrixXd delta_b;
  Eigen::MatrixXd delta_a;
  int client = -1;
};

ClientDelta local_update(const LoraState& global, const SketchMatrix& sketch,
                         const Dataset& data, int local_iters, double learning_rate,
                         int batch_size, int client, Rng& rng);

// Inverse-probability-weighted merge: new = old - sum_n a_n / q_n * delta_n
// over participants, applied in ascending client order. Deltas must match
// the draw exactly.
LoraState aggregate(const LoraState& global, const std::vector<ClientDelta>& deltas,
                    const ParticipationDraw& draw, const Plan& plan,
                    const Eigen::VectorXd& weights);

// Scalars a client at ratio k puts on the air per round: the k live columns
// of delta_b and k live rows of delta_a.
inline std::int64_t transmitted_scalars(int k, Eigen::Index out_dim, Eigen::Index in_dim) {
  return static_cast<std::int64_t>(k) * (out_dim + in_dim);
}

struct RoundResult {
  LoraState state;
  RoundRecord record;
};

// One full round: server draws participation and per-client sketches, the
// participants run local SGD on their own derived streams, the server
// aggregates, the wireless model prices the round, and the merged model is
// scored on the eval batch. Everything is a pure function of the inputs.
RoundResult run_round(const LoraState& state, const Plan& plan,
                      const std::vector<Dataset>& client_data,
                      const std::vector<ClientProfile>& profiles, const SystemConfig& system,
                      int batch_size, int round, std::uint64_t run_seed, const Batch& eval_set,
                      double elapsed_before);

}  // namespace fedlora
