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

using aoifl::derive_seed;
using aoifl::RngStream;

TEST_CASE("derive_seed is deterministic and sensitive to every input") {
  const auto s = derive_seed(42, "data", 0, 0);
  REQUIRE(s == derive_seed(42, "data", 0, 0));
  REQUIRE(s != derive_seed(43, "data", 0, 0));
  REQUIRE(s != derive_seed(42, "partition", 0, 0));
  REQUIRE(s != derive_seed(42, "data", 1, 0));
  REQUIRE(s != derive_seed(42, "data", 0, 1));
  REQUIRE(derive_seed(42, "data", 1, 2) != derive_seed(42, "data", 2, 1));
}

TEST_CASE("streams with equal seeds replay identically") {
  RngStream a(derive_seed(7, "select", 3, 0));
  RngStream b(derive_seed(7, "select", 3, 0));
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("uniform stays in [0, 1) with the right mean") {
  RngStream rng(1);
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  // se of the mean = 1/sqrt(12 n); allow 4 se.
  REQUIRE(std::abs(sum / n - 0.5) < 4.0 / std::sqrt(12.0 * n));
}

TEST_CASE("ranged uniform respects bounds") {
  RngStream rng(2);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform(-3.0, 5.0);
    REQUIRE(u >= -3.0);
    REQUIRE(u < 5.0);
  }
}

TEST_CASE("uniform_int covers [0, n) without bias toward any residue") {
  RngStream rng(3);
  REQUIRE_THROWS_AS(rng.uniform_int(0), std::invalid_argument);
  for (int i = 0; i < 100; ++i) REQUIRE(rng.uniform_int(1) == 0);

  const std::uint64_t n = 7;
  std::vector<int> counts(n, 0);
  const int draws = 140000;
  for (int i = 0; i < draws; ++i) ++counts[rng.uniform_int(n)];
  const double expected = static_cast<double>(draws) / n;
  for (auto c : counts) REQUIRE(std::abs(c - expected) < 5.0 * std::sqrt(expected));
}

TEST_CASE("normal matches N(0,1) moments") {
  RngStream rng(4);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  REQUIRE(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
  REQUIRE(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("gamma matches its mean for shapes below and above one") {
  for (const double alpha : {0.3, 1.0, 4.0}) {
    RngStream rng(5);
    const int n = 200000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = rng.gamma(alpha);
      REQUIRE(x >= 0.0);
      sum += x;
    }
    // Var(Gamma(alpha, 1)) = alpha; allow 5 se.
    REQUIRE(std::abs(sum / n - alpha) < 5.0 * std::sqrt(alpha / n));
  }
  RngStream rng(6);
  REQUIRE_THROWS_AS(rng.gamma(0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(rng.gamma(-1.0), std::invalid_argument);
}

TEST_CASE("dirichlet draws are simplex points") {
  RngStream rng(7);
  for (const double alpha : {0.1, 1.0, 100.0}) {
    const auto p = rng.dirichlet(alpha, 6);
    REQUIRE(p.size() == 6);
    double sum = 0.0;
    for (double v : p) {
      REQUIRE(v >= 0.0);
      sum += v;
    }
    REQUIRE(std::abs(sum - 1.0) < 1e-12);
  }
  // Large alpha concentrates near the uniform vector.
  const auto p = rng.dirichlet(1e6, 4);
  for (double v : p) REQUIRE(std::abs(v - 0.25) < 0.01);
}

TEST_CASE("shuffle permutes and replays under the same seed") {
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  std::vector<int> a = v, b = v;
  RngStream r1(8), r2(8);
  r1.shuffle(a);
  r2.shuffle(b);
  REQUIRE(a == b);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  REQUIRE(sorted == v);

  std::vector<int> empty;
  r1.shuffle(empty);
  REQUIRE(empty.empty());
}

TEST_CASE("sample_without_replacement yields k distinct in-range indices") {
  RngStream rng(9);
  const auto s = rng.sample_without_replacement(20, 8);
  REQUIRE(s.size() == 8);
  std::set<int> uniq(s.begin(), s.end());
  REQUIRE(uniq.size() == 8);
  for (int x : s) {
    REQUIRE(x >= 0);
    REQUIRE(x < 20);
  }

  const auto all = rng.sample_without_replacement(5, 5);
  std::set<int> cover(all.begin(), all.end());
  REQUIRE(cover == std::set<int>({0, 1, 2, 3, 4}));

  REQUIRE_THROWS_AS(rng.sample_without_replacement(3, 4), std::invalid_argument);
}

TEST_CASE("sample_without_replacement is unbiased over subsets") {
  RngStream rng(10);
  std::vector<int> hits(6, 0);
  const int draws = 60000;
  for (int i = 0; i < draws; ++i)
    for (int x : rng.sample_without_replacement(6, 2)) ++hits[x];
  const double expected = draws * 2.0 / 6.0;
  for (int c : hits) REQUIRE(std::abs(c - expected) < 5.0 * std::sqrt(expected));
}
