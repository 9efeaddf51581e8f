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

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "aoifl/dataset.hpp"
#include "aoifl/rng.hpp"

namespace aoifl {

/// Parameters of the drifting Gaussian mixture generator.
struct DriftGenConfig {
  int n_train = 150000;
  int n_test = 5000;
  int n_features = 20;
  int n_classes = 5;
  /// Scale of the static class centers.
  double class_separation = 0.3;
  /// How far each class center travels over one unit of generator time.
  double drift_magnitude = 1.5;
  std::uint64_t seed = 0;

  bool operator==(const DriftGenConfig&) const = default;
};

/// Generated corpus plus the per-train-sample generator time used for
/// temporally contiguous partitioning.
struct SyntheticData {
  Dataset train;
  Dataset test;
  std::vector<double> sample_time;
};

/// Draw a drifting-mixture dataset. Each class c has a static center
/// separation * z_c and a unit drift direction d_c; a sample at time tau is
/// N(center_c + tau * magnitude * d_c, I). Train samples get tau ~ U[0, 1],
/// test samples sit at tau = 1 (the post-drift regime). Labels are uniform.
/// Draw order is fixed: class centers then directions, then per train sample
/// (label, tau, noise), then per test sample (label, noise).
inline SyntheticData generate_synthetic_drift(const DriftGenConfig& config, RngStream& rng) {
  if (config.n_train < 1 || config.n_test < 1) throw std::invalid_argument("generate_drift_data: empty split");
  if (config.n_features < 1 || config.n_classes < 2)
    throw std::invalid_argument("generate_drift_data: bad feature/class counts");

  const int d = config.n_features;
  const int c = config.n_classes;
  Eigen::MatrixXd base(c, d), dir(c, d);
  for (int cls = 0; cls < c; ++cls)
    for (int j = 0; j < d; ++j) base(cls, j) = config.class_separation * rng.normal();
  for (int cls = 0; cls < c; ++cls) {
    for (int j = 0; j < d; ++j) dir(cls, j) = rng.normal();
    const double norm = dir.row(cls).norm();
    if (norm > 0.0) dir.row(cls) /= norm;
  }

  FeatureSchema schema;
  for (int j = 0; j < d; ++j) schema.feature_names.push_back("f" + std::to_string(j));
  schema.label_column = -1;
  schema.n_classes = c;
  schema.benign_class = 0;

  SyntheticData out;
  out.train.schema = schema;
  out.test.schema = schema;
  out.train.category_values.assign(static_cast<std::size_t>(d), {});
  out.test.category_values.assign(static_cast<std::size_t>(d), {});
  out.train.features.resize(config.n_train, d);
  out.test.features.resize(config.n_test, d);
  out.train.labels.reserve(static_cast<std::size_t>(config.n_train));
  out.test.labels.reserve(static_cast<std::size_t>(config.n_test));
  out.sample_time.reserve(static_cast<std::size_t>(config.n_train));

  for (int i = 0; i < config.n_train; ++i) {
    const int label = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(c)));
    const double tau = rng.uniform();
    for (int j = 0; j < d; ++j)
      out.train.features(i, j) = base(label, j) + tau * config.drift_magnitude * dir(label, j) + rng.normal();
    out.train.labels.push_back(label);
    out.sample_time.push_back(tau);
  }
  for (int i = 0; i < config.n_test; ++i) {
    const int label = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(c)));
    for (int j = 0; j < d; ++j)
      out.test.features(i, j) = base(label, j) + config.drift_magnitude * dir(label, j) + rng.normal();
    out.test.labels.push_back(label);
  }
  return out;
}

/// Convenience overload seeding the generator stream from config.seed.
inline SyntheticData generate_synthetic_drift(const DriftGenConfig& config) {
  RngStream rng(derive_seed(config.seed, "data"));
  return generate_synthetic_drift(config, rng);
}

}  // namespace aoifl
