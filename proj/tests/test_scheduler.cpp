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

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "aoifl/rng.hpp"
#include "aoifl/scheduler.hpp"

using namespace aoifl;

namespace {

std::vector<ClientProfile> flat_profiles(int n) {
  std::vector<ClientProfile> p(static_cast<std::size_t>(n));
  for (auto& c : p) {
    c.bandwidth_mbps = 10.0;
    c.dropout_prob = 0.0;
  }
  return p;
}

/// State with a random delivery history over the first t-1 rounds.
SchedulerState random_state(int n, std::int64_t t, RngStream& rng) {
  SchedulerState state(n);
  auto profiles = flat_profiles(n);
  for (int c = 0; c < n; ++c) {
    if (rng.uniform() < 0.3) continue;  // leave some clients never seen
    const auto when = 1 + static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(t - 1)));
    profiles[static_cast<std::size_t>(c)].bandwidth_mbps = rng.uniform(5.0, 50.0);
    profiles[static_cast<std::size_t>(c)].dropout_prob = rng.uniform(0.0, 0.25);
    mark_delivered(state, c, when, rng.uniform(0.1, 2.0), profiles[static_cast<std::size_t>(c)], 0.5);
  }
  return state;
}

}  // namespace

TEST_CASE("policy names round-trip") {
  for (const auto kind :
       {PolicyKind::kRandom, PolicyKind::kAoiFirst, PolicyKind::kUtilityFirst, PolicyKind::kHybrid})
    REQUIRE(policy_from_string(to_string(kind)) == kind);
  REQUIRE_THROWS_AS(policy_from_string("greedy"), std::invalid_argument);
}

TEST_CASE("aoi grows by one per round and resets on delivery") {
  SchedulerState state(3);
  REQUIRE(aoi_vector(state, 1) == std::vector<double>({1, 1, 1}));
  REQUIRE(aoi_vector(state, 4) == std::vector<double>({4, 4, 4}));

  const auto profiles = flat_profiles(3);
  mark_delivered(state, 1, 3, 0.5, profiles[1], 0.5);
  REQUIRE(aoi_vector(state, 4) == std::vector<double>({4, 1, 4}));
  REQUIRE(aoi_vector(state, 6) == std::vector<double>({6, 3, 6}));
  REQUIRE_THROWS_AS(aoi_vector(state, 0), std::invalid_argument);
}

TEST_CASE("raw utility matches the closed form") {
  REQUIRE(raw_utility(std::log(5.0), 16.0, 0.25) == Catch::Approx(4.8283137373023006).margin(1e-15));
  REQUIRE(raw_utility(0.0, 100.0, 0.0) == 0.0);
}

TEST_CASE("ema seeds on first observation then blends") {
  REQUIRE(ema_update(0.0, false, 2.0, 0.5) == 2.0);
  REQUIRE(ema_update(2.0, true, 4.0, 0.5) == 3.0);
  REQUIRE(ema_update(2.0, true, 4.0, 1.0) == 4.0);
  REQUIRE(ema_update(2.0, true, 4.0, 0.0) == 2.0);
}

TEST_CASE("mark_delivered folds the profile-derived utility") {
  SchedulerState state(2);
  ClientProfile p;
  p.bandwidth_mbps = 16.0;
  p.dropout_prob = 0.25;
  mark_delivered(state, 0, 2, std::log(5.0), p, 0.5);
  REQUIRE(state.seen[0]);
  REQUIRE(state.last_success[0] == 2);
  REQUIRE(state.ema_utility[0] == Catch::Approx(4.8283137373023006).margin(1e-12));

  mark_delivered(state, 0, 5, std::log(5.0) * 2.0, p, 0.5);
  REQUIRE(state.last_success[0] == 5);
  // ema = 0.5 * 2u + 0.5 * u = 1.5 u.
  REQUIRE(state.ema_utility[0] == Catch::Approx(1.5 * 4.8283137373023006).margin(1e-12));
  REQUIRE(!state.seen[1]);
  REQUIRE_THROWS_AS(mark_delivered(state, 9, 1, 0.1, p, 0.5), std::out_of_range);
}

TEST_CASE("minmax_normalize maps range ends to 0 and 1, constants to 0") {
  const auto out = minmax_normalize({2.0, 6.0, 4.0});
  REQUIRE(out == std::vector<double>({0.0, 1.0, 0.5}));
  REQUIRE(minmax_normalize({3.0, 3.0, 3.0}) == std::vector<double>({0.0, 0.0, 0.0}));
  REQUIRE(minmax_normalize({}).empty());
}

TEST_CASE("selection returns k distinct sorted ids and validates shape") {
  RngStream rng(40);
  SchedulerState state(10);
  const auto profiles = flat_profiles(10);
  for (const auto kind :
       {PolicyKind::kRandom, PolicyKind::kAoiFirst, PolicyKind::kUtilityFirst, PolicyKind::kHybrid}) {
    PolicyConfig pc;
    pc.kind = kind;
    const auto sel = select_clients(pc, state, profiles, 1, 4, rng);
    REQUIRE(sel.size() == 4);
    REQUIRE(std::is_sorted(sel.begin(), sel.end()));
    REQUIRE(std::set<int>(sel.begin(), sel.end()).size() == 4);
    for (int c : sel) {
      REQUIRE(c >= 0);
      REQUIRE(c < 10);
    }
  }
  PolicyConfig pc;
  REQUIRE_THROWS_AS(select_clients(pc, state, profiles, 1, 0, rng), std::invalid_argument);
  REQUIRE_THROWS_AS(select_clients(pc, state, profiles, 1, 11, rng), std::invalid_argument);
  REQUIRE_THROWS_AS(select_clients(pc, state, flat_profiles(9), 1, 2, rng), std::invalid_argument);
}

TEST_CASE("aoi_first picks the stalest clients") {
  SchedulerState state(5);
  const auto profiles = flat_profiles(5);
  // Deliveries at rounds 4,3,2 for clients 0,1,2; clients 3,4 never seen.
  mark_delivered(state, 0, 4, 1.0, profiles[0], 0.5);
  mark_delivered(state, 1, 3, 1.0, profiles[1], 0.5);
  mark_delivered(state, 2, 2, 1.0, profiles[2], 0.5);
  PolicyConfig pc;
  pc.kind = PolicyKind::kAoiFirst;
  RngStream rng(41);
  // Ages at t=5: {1, 2, 3, 5, 5}; the top 3 are clients 2, 3, 4.
  REQUIRE(select_clients(pc, state, profiles, 5, 3, rng) == std::vector<int>({2, 3, 4}));
}

TEST_CASE("utility_first prefers never-seen clients, then high EMA") {
  SchedulerState state(4);
  auto profiles = flat_profiles(4);
  mark_delivered(state, 0, 1, 0.2, profiles[0], 0.5);  // low utility
  mark_delivered(state, 1, 1, 5.0, profiles[1], 0.5);  // high utility
  PolicyConfig pc;
  pc.kind = PolicyKind::kUtilityFirst;
  RngStream rng(42);
  // Unseen 2 and 3 outrank both seen clients; third slot goes to client 1.
  REQUIRE(select_clients(pc, state, profiles, 2, 3, rng) == std::vector<int>({1, 2, 3}));
}

TEST_CASE("random selection is uniform over clients") {
  SchedulerState state(6);
  const auto profiles = flat_profiles(6);
  PolicyConfig pc;
  pc.kind = PolicyKind::kRandom;
  RngStream rng(43);
  std::vector<int> hits(6, 0);
  const int rounds = 30000;
  for (int t = 0; t < rounds; ++t)
    for (int c : select_clients(pc, state, profiles, 1, 2, rng)) ++hits[c];
  const double expected = rounds * 2.0 / 6.0;
  for (int h : hits) REQUIRE(std::abs(h - expected) < 5.0 * std::sqrt(expected));
}

TEST_CASE("equal-score ties break uniformly through the seeded permutation") {
  // Fresh state: every client has age t and no utility history, so every
  // policy scores all clients equally and only the permutation decides.
  SchedulerState state(8);
  const auto profiles = flat_profiles(8);
  for (const auto kind : {PolicyKind::kAoiFirst, PolicyKind::kUtilityFirst, PolicyKind::kHybrid}) {
    PolicyConfig pc;
    pc.kind = kind;
    RngStream rng(44);
    std::vector<int> hits(8, 0);
    const int rounds = 16000;
    for (int t = 0; t < rounds; ++t)
      for (int c : select_clients(pc, state, profiles, 1, 2, rng)) ++hits[c];
    const double expected = rounds * 2.0 / 8.0;
    for (int h : hits) REQUIRE(std::abs(h - expected) < 5.0 * std::sqrt(expected));
  }
}

TEST_CASE("selection replays exactly under an equal rng seed") {
  RngStream setup(45);
  const auto state = random_state(12, 9, setup);
  const auto profiles = flat_profiles(12);
  for (const auto kind :
       {PolicyKind::kRandom, PolicyKind::kAoiFirst, PolicyKind::kUtilityFirst, PolicyKind::kHybrid}) {
    PolicyConfig pc;
    pc.kind = kind;
    RngStream r1(46), r2(46);
    REQUIRE(select_clients(pc, state, profiles, 9, 5, r1) == select_clients(pc, state, profiles, 9, 5, r2));
  }
}

TEST_CASE("hybrid at lambda 1 reproduces aoi_first, at lambda 0 utility_first") {
  RngStream setup(47);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 3 + static_cast<int>(setup.uniform_int(12));
    const auto t = 2 + static_cast<std::int64_t>(setup.uniform_int(20));
    const int k = 1 + static_cast<int>(setup.uniform_int(static_cast<std::uint64_t>(n)));
    const auto state = random_state(n, t, setup);
    const auto profiles = flat_profiles(n);
    const auto tie_seed = setup.next_u64();

    PolicyConfig aoi, util, h1, h0;
    aoi.kind = PolicyKind::kAoiFirst;
    util.kind = PolicyKind::kUtilityFirst;
    h1.kind = h0.kind = PolicyKind::kHybrid;
    h1.lambda = 1.0;
    h0.lambda = 0.0;

    RngStream ra(tie_seed), rh1(tie_seed);
    REQUIRE(select_clients(aoi, state, profiles, t, k, ra) == select_clients(h1, state, profiles, t, k, rh1));
    RngStream ru(tie_seed), rh0(tie_seed);
    REQUIRE(select_clients(util, state, profiles, t, k, ru) == select_clients(h0, state, profiles, t, k, rh0));
  }
}

TEST_CASE("hybrid ranking is invariant to affine rescaling of utilities") {
  RngStream setup(48);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 4 + static_cast<int>(setup.uniform_int(8));
    SchedulerState state = random_state(n, 7, setup);
    SchedulerState scaled = state;
    for (auto& u : scaled.ema_utility) u = 3.5 * u + 11.0;
    const auto profiles = flat_profiles(n);
    PolicyConfig pc;
    pc.kind = PolicyKind::kHybrid;
    pc.lambda = 0.4;
    const auto tie_seed = setup.next_u64();
    RngStream r1(tie_seed), r2(tie_seed);
    REQUIRE(select_clients(pc, state, profiles, 7, 3, r1) == select_clients(pc, scaled, profiles, 7, 3, r2));
  }
}

TEST_CASE("hybrid with history favors stale clients as lambda rises") {
  // Client 0: fresh but high utility; client 1: stale with low utility.
  SchedulerState state(3);
  auto profiles = flat_profiles(3);
  mark_delivered(state, 2, 1, 1.0, profiles[2], 0.5);
  mark_delivered(state, 1, 2, 0.1, profiles[1], 0.5);
  mark_delivered(state, 0, 9, 9.0, profiles[0], 0.5);
  PolicyConfig pc;
  pc.kind = PolicyKind::kHybrid;
  RngStream r1(49), r2(49);
  pc.lambda = 1.0;
  REQUIRE(select_clients(pc, state, profiles, 10, 1, r1) == std::vector<int>({2}));
  pc.lambda = 0.0;
  REQUIRE(select_clients(pc, state, profiles, 10, 1, r2) == std::vector<int>({0}));
}
