// SPDX-License-Identifier: Apache-2.0
#include "fedlora/data.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace fedlora {

Dataset make_gaussian_mixture(const MixtureSpec& spec, Rng& rng) {
  if (spec.classes < 2) throw ConfigError("mixture: need at least two classes");
  if (spec.features < 1) throw ConfigError("mixture: need at least one feature");
  if (spec.samples < spec.classes) {
    throw ConfigError("mixture: need at least one sample per class");
  }
  if (!(spec.center_scale > 0.0) || !(spec.noise > 0.0)) {
    throw ConfigError("mixture: scales must be positive");
  }

  Eigen::MatrixXd centers(spec.classes, spec.features);
  for (int c = 0; c < spec.classes; ++c) {
    for (int j = 0; j < spec.features; ++j) centers(c, j) = rng.normal(0.0, spec.center_scale);
  }

  Dataset out;
  out.classes = spec.classes;
  out.inputs.resize(spec.samples, spec.features);
  out.targets.resize(spec.samples);
  int row = 0;
  for (int c = 0; c < spec.classes; ++c) {
    int count = spec.samples / spec.classes;
    if (c < spec.samples % spec.classes) ++count;
    for (int i = 0; i < count; ++i, ++row) {
      out.targets[row] = c;
      for (int j = 0; j < spec.features; ++j) {
        out.inputs(row, j) = centers(c, j) + rng.normal(0.0, spec.noise);
      }
    }
  }
  return out;
}

namespace {

Dataset take_rows(const Dataset& data, const std::vector<int>& rows) {
  Dataset out;
  out.classes = data.classes;
  out.inputs.resize(static_cast<Eigen::Index>(rows.size()), data.inputs.cols());
  out.targets.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.inputs.row(static_cast<Eigen::Index>(i)) = data.inputs.row(rows[i]);
    out.targets[static_cast<Eigen::Index>(i)] = data.targets[rows[i]];
  }
  return out;
}

}  // namespace

std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double eval_fraction, Rng& rng) {
  const int n = static_cast<int>(data.size());
  if (n < 2) throw EmptyDatasetError("split_dataset: need at least two samples");
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) {
    throw ConfigError("split_dataset: eval_fraction must lie in (0, 1)");
  }
  int eval_count = static_cast<int>(eval_fraction * n);
  eval_count = std::clamp(eval_count, 1, n - 1);

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  const std::vector<int> eval_rows(order.begin(), order.begin() + eval_count);
  const std::vector<int> train_rows(order.begin() + eval_count, order.end());
  return {take_rows(data, train_rows), take_rows(data, eval_rows)};
}

std::vector<Dataset> dirichlet_partition(const Dataset& data, int clients, double alpha,
                                         Rng& rng) {
  if (data.size() == 0) throw EmptyDatasetError("dirichlet_partition: empty dataset");
  if (clients < 1) throw ConfigError("dirichlet_partition: need at least one client");
  if (!(alpha > 0.0)) throw ConfigError("dirichlet_partition: alpha must be positive");
  if (static_cast<Eigen::Index>(clients) > data.size()) {
    throw ConfigError("dirichlet_partition: more clients than samples");
  }

  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(data.classes));
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    by_class[static_cast<std::size_t>(data.targets[i])].push_back(static_cast<int>(i));
  }

  constexpr int kAttempts = 100;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    std::vector<std::vector<int>> assigned(static_cast<std::size_t>(clients));
    for (const auto& rows : by_class) {
      if (rows.empty()) continue;
      const Eigen::VectorXd props = rng.dirichlet(alpha, clients);
      for (const int row : rows) {
        const double u = rng.uniform();
        double acc = 0.0;
        int pick = clients - 1;
        for (int c = 0; c < clients; ++c) {
          acc += props[c];
          if (u < acc) {
            pick = c;
            break;
          }
        }
        assigned[static_cast<std::size_t>(pick)].push_back(row);
      }
    }
    const bool all_nonempty =
        std::all_of(assigned.begin(), assigned.end(),
                    [](const std::vector<int>& rows) { return !rows.empty(); });
    if (!all_nonempty) continue;

    std::vector<Dataset> parts;
    parts.reserve(static_cast<std::size_t>(clients));
    for (const auto& rows : assigned) parts.push_back(take_rows(data, rows));
    return parts;
  }
  throw ConfigError("dirichlet_partition: could not give every client a sample in " +
                    std::to_string(kAttempts) + " attempts");
}

Eigen::VectorXd data_weights(const std::vector<Dataset>& parts) {
  if (parts.empty()) throw EmptyDatasetError("data_weights: no clients");
  Eigen::VectorXd w(static_cast<Eigen::Index>(parts.size()));
  double total = 0.0;
  for (std::size_t n = 0; n < parts.size(); ++n) {
    w[static_cast<Eigen::Index>(n)] = static_cast<double>(parts[n].size());
    total += static_cast<double>(parts[n].size());
  }
  if (total == 0.0) throw EmptyDatasetError("data_weights: all clients empty");
  return w / total;
}

Batch draw_batch(const Dataset& data, int batch_size, Rng& rng) {
  if (data.size() == 0) throw EmptyDatasetError("draw_batch: empty dataset");
  if (batch_size < 1) throw EmptyBatchError("draw_batch: batch size must be positive");
  Eigen::MatrixXd inputs(batch_size, data.inputs.cols());
  Eigen::VectorXi targets(batch_size);
  for (int i = 0; i < batch_size; ++i) {
    const auto row = static_cast<Eigen::Index>(
        rng.uniform_below(static_cast<std::uint64_t>(data.size())));
    inputs.row(i) = data.inputs.row(row);
    targets[i] = data.targets[row];
  }
  return Batch(std::move(inputs), std::move(targets));
}

Batch as_batch(const Dataset& data) {
  if (data.size() == 0) throw EmptyDatasetError("as_batch: empty dataset");
  return Batch(data.inputs, data.targets);
}

}  // namespace fedlora
