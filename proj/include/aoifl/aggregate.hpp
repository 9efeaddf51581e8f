// Copyright 2026 The aoifl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "aoifl/model.hpp"

namespace aoifl {

/// One delivered client update: the locally trained parameters and the
/// client's shard size, which weighs it in FedAvg.
struct ClientUpdate {
  SoftmaxModel model;
  double weight = 0.0;
  int client = -1;
};

namespace detail {

inline void check_updates(const std::vector<ClientUpdate>& updates) {
  if (updates.empty()) throw std::invalid_argument("aggregate: no updates");
  const auto nf = updates.front().model.n_features();
  const auto nc = updates.front().model.n_classes();
  for (const auto& u : updates) {
    if (u.model.n_features() != nf || u.model.n_classes() != nc)
      throw std::invalid_argument("aggregate: mismatched model shapes");
  }
}

}  // namespace detail

/// Sample-count weighted mean of the updates.
inline SoftmaxModel fedavg_aggregate(const std::vector<ClientUpdate>& updates) {
  detail::check_updates(updates);
  double total_weight = 0.0;
  for (const auto& u : updates) {
    if (u.weight <= 0.0) throw std::invalid_argument("fedavg_aggregate: non-positive weight");
    total_weight += u.weight;
  }
  SoftmaxModel out = init_model(updates.front().model.n_features(), updates.front().model.n_classes());
  for (const auto& u : updates) {
    const double w = u.weight / total_weight;
    out.weights.noalias() += w * u.model.weights;
    out.bias.noalias() += w * u.model.bias;
  }
  return out;
}

/// Coordinate-wise trimmed mean: each parameter is aggregated independently
/// by sorting the m delivered values, dropping floor(trim_fraction * m) from
/// each end, and averaging the rest unweighted. If trimming would drop
/// everything the coordinate falls back to the median.
inline SoftmaxModel trimmed_mean_aggregate(const std::vector<ClientUpdate>& updates, double trim_fraction) {
  detail::check_updates(updates);
  if (trim_fraction < 0.0 || trim_fraction >= 0.5)
    throw std::invalid_argument("trimmed_mean_aggregate: trim_fraction outside [0, 0.5)");
  const auto m = updates.size();
  const auto drop = static_cast<std::size_t>(static_cast<double>(m) * trim_fraction);

  std::vector<double> column(m);
  auto combine = [&](auto read) -> double {
    for (std::size_t i = 0; i < m; ++i) column[i] = read(updates[i].model);
    std::sort(column.begin(), column.end());
    if (2 * drop >= m) {
      // Unreachable for trim_fraction < 0.5, kept as a safe fallback.
      const std::size_t mid = m / 2;
      return m % 2 == 1 ? column[mid] : 0.5 * (column[mid - 1] + column[mid]);
    }
    double sum = 0.0;
    for (std::size_t i = drop; i < m - drop; ++i) sum += column[i];
    return sum / static_cast<double>(m - 2 * drop);
  };

  SoftmaxModel out = init_model(updates.front().model.n_features(), updates.front().model.n_classes());
  for (Eigen::Index r = 0; r < out.weights.rows(); ++r)
    for (Eigen::Index c = 0; c < out.weights.cols(); ++c)
      out.weights(r, c) = combine([&](const SoftmaxModel& mdl) { return mdl.weights(r, c); });
  for (Eigen::Index r = 0; r < out.bias.size(); ++r)
    out.bias(r) = combine([&](const SoftmaxModel& mdl) { return mdl.bias(r); });
  return out;
}

}  // namespace aoifl
