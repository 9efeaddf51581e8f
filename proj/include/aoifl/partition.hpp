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
#include <cmath>
#include <stdexcept>
#include <vector>

#include "aoifl/dataset.hpp"
#include "aoifl/rng.hpp"

namespace aoifl {

/// Dirichlet label-skew partition. For each class a proportion vector
/// p ~ Dir(alpha) over the clients is drawn, then the class's samples are
/// distributed accordingly: with `time_order` null each sample picks its
/// client by an independent categorical draw from p; with `time_order` given
/// (one timestamp per sample) the class's samples are sorted by time and cut
/// into contiguous blocks of the proportional sizes, so low client indices
/// receive early samples. Empty shards are repaired by moving one random
/// sample from the currently largest shard. Every shard lists its sample
/// indices ascending.
inline std::vector<ClientShard> dirichlet_partition(const std::vector<int>& labels, int n_classes, int n_clients,
                                                    double alpha, RngStream& rng,
                                                    const std::vector<double>* time_order = nullptr) {
  if (labels.empty()) throw std::invalid_argument("dirichlet_partition: no samples");
  if (n_clients < 1) throw std::invalid_argument("dirichlet_partition: n_clients must be positive");
  if (static_cast<std::size_t>(n_clients) > labels.size())
    throw std::invalid_argument("dirichlet_partition: more clients than samples");
  if (alpha <= 0.0) throw std::invalid_argument("dirichlet_partition: alpha must be positive");
  if (time_order != nullptr && time_order->size() != labels.size())
    throw std::invalid_argument("dirichlet_partition: time_order size mismatch");

  std::vector<std::vector<int>> class_samples(static_cast<std::size_t>(n_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= n_classes) throw std::invalid_argument("dirichlet_partition: label out of range");
    class_samples[static_cast<std::size_t>(y)].push_back(static_cast<int>(i));
  }

  std::vector<std::vector<double>> proportions(static_cast<std::size_t>(n_classes));
  for (int c = 0; c < n_classes; ++c)
    proportions[static_cast<std::size_t>(c)] = rng.dirichlet(alpha, static_cast<std::size_t>(n_clients));

  std::vector<ClientShard> shards(static_cast<std::size_t>(n_clients));
  for (int j = 0; j < n_clients; ++j) shards[static_cast<std::size_t>(j)].owner_client = j;

  for (int c = 0; c < n_classes; ++c) {
    auto& samples = class_samples[static_cast<std::size_t>(c)];
    if (samples.empty()) continue;
    const auto& p = proportions[static_cast<std::size_t>(c)];
    std::vector<double> cum(p.size());
    double acc = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      acc += p[j];
      cum[j] = acc;
    }
    cum.back() = 1.0;

    if (time_order == nullptr) {
      for (const int idx : samples) {
        const double u = rng.uniform();
        const auto it = std::lower_bound(cum.begin(), cum.end(), u);
        const auto j = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cum.begin(),
                                                                         static_cast<std::ptrdiff_t>(n_clients) - 1));
        shards[j].sample_indices.push_back(idx);
      }
    } else {
      std::stable_sort(samples.begin(), samples.end(), [&](int a, int b) {
        return (*time_order)[static_cast<std::size_t>(a)] < (*time_order)[static_cast<std::size_t>(b)];
      });
      const auto n_c = static_cast<double>(samples.size());
      std::size_t start = 0;
      for (int j = 0; j < n_clients; ++j) {
        const auto end = j + 1 == n_clients
                             ? samples.size()
                             : static_cast<std::size_t>(std::floor(cum[static_cast<std::size_t>(j)] * n_c));
        for (std::size_t s = start; s < std::max(end, start); ++s)
          shards[static_cast<std::size_t>(j)].sample_indices.push_back(samples[s]);
        start = std::max(end, start);
      }
    }
  }

  // Every client must own at least one sample or it could never train.
  for (auto& shard : shards) {
    if (!shard.sample_indices.empty()) continue;
    auto donor = std::max_element(shards.begin(), shards.end(), [](const ClientShard& a, const ClientShard& b) {
      return a.sample_indices.size() < b.sample_indices.size();
    });
    const auto pick = static_cast<std::size_t>(rng.uniform_int(static_cast<std::uint64_t>(donor->sample_indices.size())));
    shard.sample_indices.push_back(donor->sample_indices[pick]);
    donor->sample_indices.erase(donor->sample_indices.begin() + static_cast<std::ptrdiff_t>(pick));
  }

  for (auto& shard : shards) std::sort(shard.sample_indices.begin(), shard.sample_indices.end());
  return shards;
}

}  // namespace aoifl
