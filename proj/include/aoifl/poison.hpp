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

#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "aoifl/dataset.hpp"
#include "aoifl/rng.hpp"

namespace aoifl {

/// Sparse label remap keyed by global sample index. The training dataset is
/// never mutated; poisoned clients read labels through their overlay.
using PoisonOverlay = std::unordered_map<int, int>;

/// Label seen by a client for sample `index` whose clean label is `label`.
inline int apply_overlay(const PoisonOverlay* overlay, int index, int label) {
  if (overlay == nullptr) return label;
  const auto it = overlay->find(index);
  return it == overlay->end() ? label : it->second;
}

/// Build a label-flip overlay over one shard: each sample whose clean label
/// differs from `target_class` is remapped to `target_class` with probability
/// `flip_prob` (one Bernoulli draw per candidate, in shard order). Samples
/// already labeled `target_class` consume no randomness.
inline PoisonOverlay apply_label_flip(const Dataset& train, const ClientShard& shard, int target_class,
                                      double flip_prob, RngStream& rng) {
  if (flip_prob < 0.0 || flip_prob > 1.0) throw std::invalid_argument("apply_label_flip: flip_prob outside [0, 1]");
  if (target_class < 0 || target_class >= train.schema.n_classes)
    throw std::invalid_argument("apply_label_flip: target_class out of range");
  PoisonOverlay overlay;
  for (const int idx : shard.sample_indices) {
    if (train.labels[static_cast<std::size_t>(idx)] == target_class) continue;
    if (rng.uniform() < flip_prob) overlay.emplace(idx, target_class);
  }
  return overlay;
}

}  // namespace aoifl
