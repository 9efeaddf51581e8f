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
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "aoifl/client.hpp"
#include "aoifl/rng.hpp"

namespace aoifl {

enum class PolicyKind { kRandom, kAoiFirst, kUtilityFirst, kHybrid };

inline std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kRandom: return "random";
    case PolicyKind::kAoiFirst: return "aoi_first";
    case PolicyKind::kUtilityFirst: return "utility_first";
    case PolicyKind::kHybrid: return "hybrid";
  }
  throw std::logic_error("unknown PolicyKind");
}

inline PolicyKind policy_from_string(const std::string& name) {
  if (name == "random") return PolicyKind::kRandom;
  if (name == "aoi_first") return PolicyKind::kAoiFirst;
  if (name == "utility_first") return PolicyKind::kUtilityFirst;
  if (name == "hybrid") return PolicyKind::kHybrid;
  throw std::invalid_argument("unknown policy '" + name + "'");
}

/// Selection policy parameters. `lambda` weighs staleness against utility in
/// the hybrid score; `ema_beta` is the weight of the newest observation in
/// the utility EMA. Clients that have never delivered always rank above seen
/// clients of equal score (the fixed cold-start rule).
struct PolicyConfig {
  PolicyKind kind = PolicyKind::kHybrid;
  double lambda = 0.6;
  double ema_beta = 0.5;

  bool operator==(const PolicyConfig&) const = default;
};

/// Per-client bookkeeping the coordinator keeps between rounds.
/// `last_success[i]` is the latest round client i delivered an update, 0 if
/// never, so a never-seen client has age t at round t.
struct SchedulerState {
  std::vector<std::int64_t> last_success;
  std::vector<double> ema_utility;
  std::vector<bool> seen;

  explicit SchedulerState(int n_clients = 0)
      : last_success(static_cast<std::size_t>(n_clients), 0),
        ema_utility(static_cast<std::size_t>(n_clients), 0.0),
        seen(static_cast<std::size_t>(n_clients), false) {}

  int n_clients() const { return static_cast<int>(last_success.size()); }
};

/// Age of every client at the start of round t: t minus its last success.
inline std::vector<double> aoi_vector(const SchedulerState& state, std::int64_t t) {
  if (t < 1) throw std::invalid_argument("aoi_vector: t must be >= 1");
  std::vector<double> ages(state.last_success.size());
  for (std::size_t i = 0; i < ages.size(); ++i) ages[i] = static_cast<double>(t - state.last_success[i]);
  return ages;
}

/// Reported training utility: loss * sqrt(bandwidth) * (1 - dropout_rate).
inline double raw_utility(double observed_loss, double bandwidth_mbps, double dropout_rate) {
  return observed_loss * std::sqrt(bandwidth_mbps) * (1.0 - dropout_rate);
}

/// One EMA step: an unseen previous value is replaced by the observation,
/// otherwise ema = beta * observed + (1 - beta) * prev.
inline double ema_update(double prev, bool prev_seen, double observed, double beta) {
  return prev_seen ? beta * observed + (1.0 - beta) * prev : observed;
}

/// Record a delivery from `client` at round t: advance its last success and
/// fold the utility recomputed from the freshly reported loss and the
/// client's profile into the EMA. Between deliveries the EMA is untouched.
inline void mark_delivered(SchedulerState& state, int client, std::int64_t t, double observed_loss,
                           const ClientProfile& profile, double ema_beta) {
  if (client < 0 || client >= state.n_clients()) throw std::out_of_range("mark_delivered: bad client id");
  const double observed = raw_utility(observed_loss, profile.bandwidth_mbps, profile.dropout_prob);
  const auto c = static_cast<std::size_t>(client);
  state.ema_utility[c] = ema_update(state.ema_utility[c], state.seen[c], observed, ema_beta);
  state.seen[c] = true;
  state.last_success[c] = t;
}

/// Min-max rescale onto [0, 1]; a constant vector maps to all zeros.
inline std::vector<double> minmax_normalize(const std::vector<double>& values) {
  std::vector<double> out(values.size(), 0.0);
  if (values.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  if (hi <= lo) return out;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - lo) / (hi - lo);
  return out;
}

/// Pick k of the N clients for round t. Random draws uniformly without
/// replacement. The score-based policies sort by (score desc, never-seen
/// first, seeded random permutation) and take the top k:
///   aoi_first      score = age
///   utility_first  score = utility EMA, never-seen clients rank above all
///   hybrid         score = lambda * age_norm + (1 - lambda) * util_norm,
///                  where never-seen clients are imputed the highest EMA in
///                  the pool before normalization
/// The permutation is the only randomness the score-based policies consume,
/// so equal-score runs are broken uniformly. Returns ids sorted ascending.
/// `profiles` is the scheduler's read-only view of the client fleet; the
/// shipped policies score from SchedulerState alone.
inline std::vector<int> select_clients(const PolicyConfig& policy, const SchedulerState& state,
                                       const std::vector<ClientProfile>& profiles, std::int64_t t, int k,
                                       RngStream& rng) {
  const int n = state.n_clients();
  if (static_cast<int>(profiles.size()) != n) throw std::invalid_argument("select_clients: profile count mismatch");
  if (k < 1 || k > n) throw std::invalid_argument("select_clients: k outside [1, n_clients]");

  std::vector<int> picked;
  if (policy.kind == PolicyKind::kRandom) {
    picked = rng.sample_without_replacement(n, k);
  } else {
    // Tie-break permutation: rank_of[id] is id's position in a random order.
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    rng.shuffle(perm);
    std::vector<int> rank_of(static_cast<std::size_t>(n));
    for (int pos = 0; pos < n; ++pos) rank_of[static_cast<std::size_t>(perm[static_cast<std::size_t>(pos)])] = pos;

    std::vector<double> score(static_cast<std::size_t>(n), 0.0);
    const auto ages = aoi_vector(state, t);
    if (policy.kind == PolicyKind::kAoiFirst) {
      score = ages;
    } else if (policy.kind == PolicyKind::kUtilityFirst) {
      for (int i = 0; i < n; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        score[ii] = state.seen[ii] ? state.ema_utility[ii] : std::numeric_limits<double>::infinity();
      }
    } else {
      double pool_max = 0.0;
      bool any_seen = false;
      for (int i = 0; i < n; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        if (state.seen[ii]) {
          pool_max = any_seen ? std::max(pool_max, state.ema_utility[ii]) : state.ema_utility[ii];
          any_seen = true;
        }
      }
      std::vector<double> utility(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        utility[ii] = state.seen[ii] ? state.ema_utility[ii] : pool_max;
      }
      const auto age_norm = minmax_normalize(ages);
      const auto util_norm = minmax_normalize(utility);
      for (int i = 0; i < n; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        score[ii] = policy.lambda * age_norm[ii] + (1.0 - policy.lambda) * util_norm[ii];
      }
    }

    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const auto ia = static_cast<std::size_t>(a), ib = static_cast<std::size_t>(b);
      if (score[ia] != score[ib]) return score[ia] > score[ib];
      if (state.seen[ia] != state.seen[ib]) return !state.seen[ia];
      return rank_of[ia] < rank_of[ib];
    });
    picked.assign(order.begin(), order.begin() + k);
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

}  // namespace aoifl
