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
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "aoifl/dataset.hpp"
#include "aoifl/poison.hpp"
#include "aoifl/rng.hpp"

namespace aoifl {

/// Multinomial logistic regression parameters: one weight row and one bias
/// entry per class.
struct SoftmaxModel {
  Eigen::MatrixXd weights;  // n_classes x n_features
  Eigen::VectorXd bias;     // n_classes

  Eigen::Index n_features() const { return weights.cols(); }
  Eigen::Index n_classes() const { return weights.rows(); }
  /// Total scalar parameter count, n_classes * (n_features + 1).
  std::int64_t param_count() const {
    return static_cast<std::int64_t>(n_classes()) * (static_cast<std::int64_t>(n_features()) + 1);
  }
};

inline SoftmaxModel init_model(Eigen::Index n_features, Eigen::Index n_classes) {
  if (n_features < 1 || n_classes < 2) throw std::invalid_argument("init_model: need n_features >= 1, n_classes >= 2");
  return SoftmaxModel{Eigen::MatrixXd::Zero(n_classes, n_features), Eigen::VectorXd::Zero(n_classes)};
}

/// Row-wise softmax of X * W^T + b. The per-row max is subtracted before
/// exponentiation so large logits cannot overflow; each output row sums to 1.
inline Eigen::MatrixXd predict_proba(const SoftmaxModel& model, const Eigen::MatrixXd& X) {
  if (X.cols() != model.n_features()) throw std::invalid_argument("predict_proba: feature count mismatch");
  if (!X.allFinite()) throw std::invalid_argument("predict_proba: non-finite input features");
  Eigen::MatrixXd logits = X * model.weights.transpose();
  logits.rowwise() += model.bias.transpose();
  const Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
  logits.colwise() -= row_max;
  Eigen::MatrixXd probs = logits.array().exp();
  const Eigen::VectorXd row_sum = probs.rowwise().sum();
  probs.array().colwise() /= row_sum.array();
  return probs;
}

/// Mean negative log-probability of the true class. Probabilities are clamped
/// below at 1e-12 before the log.
inline double cross_entropy(const Eigen::MatrixXd& probs, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(probs.rows()) != labels.size())
    throw std::invalid_argument("cross_entropy: row count mismatch");
  if (labels.empty()) throw std::invalid_argument("cross_entropy: empty batch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    double p = probs(i, labels[static_cast<std::size_t>(i)]);
    if (p < 1e-12) p = 1e-12;
    total -= std::log(p);
  }
  return total / static_cast<double>(probs.rows());
}

/// Outcome of one client's local training pass.
struct TrainReport {
  SoftmaxModel updated_model;
  std::int64_t sample_count = 0;
  /// Cross-entropy of the incoming global model on the first minibatch,
  /// measured before any gradient step.
  double initial_loss = 0.0;
};

/// Minibatch SGD from `global` on one client's shard. Each step draws a fresh
/// batch: without replacement when the shard has at least `batch_size`
/// samples, with replacement otherwise. `overlay` (may be null) remaps labels
/// at read time without touching the dataset. With steps = 0 the model is
/// returned unchanged but one batch is still drawn to measure initial_loss.
inline TrainReport local_train(const SoftmaxModel& global, const Dataset& train, const ClientShard& shard,
                               const PoisonOverlay* overlay, int steps, int batch_size, double learning_rate,
                               RngStream& rng) {
  if (shard.sample_indices.empty()) throw std::invalid_argument("local_train: empty shard");
  if (steps < 0 || batch_size < 1) throw std::invalid_argument("local_train: bad steps/batch_size");
  const auto shard_n = static_cast<int>(shard.sample_indices.size());
  const bool with_replacement = shard_n < batch_size;

  SoftmaxModel model = global;
  TrainReport report;
  report.sample_count = shard_n;

  Eigen::MatrixXd X(batch_size, model.n_features());
  std::vector<int> y(static_cast<std::size_t>(batch_size));
  const int total_steps = steps == 0 ? 1 : steps;
  for (int step = 0; step < total_steps; ++step) {
    if (with_replacement) {
      for (int b = 0; b < batch_size; ++b) {
        const auto pick = static_cast<std::size_t>(rng.uniform_int(static_cast<std::uint64_t>(shard_n)));
        const int idx = shard.sample_indices[pick];
        X.row(b) = train.features.row(idx);
        y[static_cast<std::size_t>(b)] = apply_overlay(overlay, idx, train.labels[static_cast<std::size_t>(idx)]);
      }
    } else {
      const auto picks = rng.sample_without_replacement(shard_n, batch_size);
      for (int b = 0; b < batch_size; ++b) {
        const int idx = shard.sample_indices[static_cast<std::size_t>(picks[static_cast<std::size_t>(b)])];
        X.row(b) = train.features.row(idx);
        y[static_cast<std::size_t>(b)] = apply_overlay(overlay, idx, train.labels[static_cast<std::size_t>(idx)]);
      }
    }

    Eigen::MatrixXd probs = predict_proba(model, X);
    if (step == 0) report.initial_loss = cross_entropy(probs, y);
    if (steps == 0) break;

    // Gradient of mean cross-entropy: residual = probs - onehot(y).
    for (int b = 0; b < batch_size; ++b) probs(b, y[static_cast<std::size_t>(b)]) -= 1.0;
    const double inv_b = 1.0 / static_cast<double>(batch_size);
    model.weights.noalias() -= learning_rate * inv_b * (probs.transpose() * X);
    model.bias.noalias() -= learning_rate * inv_b * (probs.colwise().sum().transpose());
  }

  report.updated_model = std::move(model);
  return report;
}

namespace detail {
constexpr std::uint32_t kModelMagic = 0x414F4D31;  // "AOM1"
}

/// Binary checkpoint: magic, dimensions, then row-major weights and bias as
/// little-endian doubles.
inline void save_model(const SoftmaxModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_model: cannot open " + path);
  const std::uint32_t magic = detail::kModelMagic;
  const auto nf = static_cast<std::int64_t>(model.n_features());
  const auto nc = static_cast<std::int64_t>(model.n_classes());
  out.write(reinterpret_cast<const char*>(&magic), sizeof(magic));
  out.write(reinterpret_cast<const char*>(&nc), sizeof(nc));
  out.write(reinterpret_cast<const char*>(&nf), sizeof(nf));
  for (Eigen::Index r = 0; r < model.weights.rows(); ++r)
    for (Eigen::Index c = 0; c < model.weights.cols(); ++c) {
      const double v = model.weights(r, c);
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
  for (Eigen::Index r = 0; r < model.bias.size(); ++r) {
    const double v = model.bias(r);
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  if (!out) throw std::runtime_error("save_model: write failed for " + path);
}

inline SoftmaxModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  std::uint32_t magic = 0;
  std::int64_t nc = 0, nf = 0;
  in.read(reinterpret_cast<char*>(&magic), sizeof(magic));
  in.read(reinterpret_cast<char*>(&nc), sizeof(nc));
  in.read(reinterpret_cast<char*>(&nf), sizeof(nf));
  if (!in || magic != detail::kModelMagic) throw std::runtime_error("load_model: bad header in " + path);
  if (nc < 2 || nf < 1 || nc > (1 << 20) || nf > (1 << 24))
    throw std::runtime_error("load_model: implausible dimensions in " + path);
  SoftmaxModel model = init_model(nf, nc);
  for (Eigen::Index r = 0; r < nc; ++r)
    for (Eigen::Index c = 0; c < nf; ++c) {
      double v = 0.0;
      in.read(reinterpret_cast<char*>(&v), sizeof(v));
      model.weights(r, c) = v;
    }
  for (Eigen::Index r = 0; r < nc; ++r) {
    double v = 0.0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    model.bias(r) = v;
  }
  if (!in) throw std::runtime_error("load_model: truncated file " + path);
  return model;
}

}  // namespace aoifl
