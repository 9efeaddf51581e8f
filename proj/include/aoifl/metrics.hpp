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
#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace aoifl {

/// Predicted class per row = argmax probability; the lowest index wins exact ties.
inline std::vector<int> argmax_predictions(const Eigen::MatrixXd& scores) {
  std::vector<int> pred(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    int best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c) {
      if (scores(i, c) > scores(i, best)) best = static_cast<int>(c);
    }
    pred[static_cast<std::size_t>(i)] = best;
  }
  return pred;
}

/// Unweighted mean of per-class F1 over all n_classes. A class with
/// precision + recall = 0 (never predicted and never present, or predicted
/// only wrongly) contributes F1 = 0 but still counts in the mean.
inline double macro_f1(const std::vector<int>& y_true, const std::vector<int>& y_pred, int n_classes) {
  if (y_true.size() != y_pred.size()) throw std::invalid_argument("macro_f1: length mismatch");
  if (n_classes < 1) throw std::invalid_argument("macro_f1: n_classes must be positive");
  std::vector<long> tp(static_cast<std::size_t>(n_classes), 0);
  std::vector<long> fp(static_cast<std::size_t>(n_classes), 0);
  std::vector<long> fn(static_cast<std::size_t>(n_classes), 0);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i], p = y_pred[i];
    if (t < 0 || t >= n_classes || p < 0 || p >= n_classes)
      throw std::invalid_argument("macro_f1: label out of range");
    if (t == p) {
      ++tp[static_cast<std::size_t>(t)];
    } else {
      ++fp[static_cast<std::size_t>(p)];
      ++fn[static_cast<std::size_t>(t)];
    }
  }
  double sum = 0.0;
  for (int c = 0; c < n_classes; ++c) {
    const auto cc = static_cast<std::size_t>(c);
    const double prec = (tp[cc] + fp[cc]) > 0 ? static_cast<double>(tp[cc]) / static_cast<double>(tp[cc] + fp[cc]) : 0.0;
    const double rec = (tp[cc] + fn[cc]) > 0 ? static_cast<double>(tp[cc]) / static_cast<double>(tp[cc] + fn[cc]) : 0.0;
    sum += (prec + rec) > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
  }
  return sum / static_cast<double>(n_classes);
}

namespace detail {

/// Mann-Whitney AUC from ranks, ties contributing half credit.
/// Returns nullopt when either group is empty.
inline std::optional<double> rank_auc(const std::vector<double>& scores, const std::vector<char>& is_positive) {
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (char b : is_positive) n_pos += static_cast<std::size_t>(b != 0);
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average 1-based rank within each tie group.
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (std::size_t t = i; t <= j; ++t) {
      if (is_positive[order[t]]) pos_rank_sum += avg_rank;
    }
    i = j + 1;
  }
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

}  // namespace detail

/// One-vs-rest AUC per class, averaged over the classes that have both
/// positives and negatives in y_true; classes without either are skipped.
/// Undefined (nullopt) when no class is computable.
inline std::optional<double> macro_ovr_auc(const std::vector<int>& y_true, const Eigen::MatrixXd& scores,
                                           int n_classes) {
  if (static_cast<Eigen::Index>(y_true.size()) != scores.rows())
    throw std::invalid_argument("macro_ovr_auc: length mismatch");
  if (scores.cols() < n_classes) throw std::invalid_argument("macro_ovr_auc: score matrix too narrow");
  const std::size_t n = y_true.size();
  double sum = 0.0;
  int computed = 0;
  std::vector<double> col(n);
  std::vector<char> pos(n);
  for (int c = 0; c < n_classes; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      col[i] = scores(static_cast<Eigen::Index>(i), c);
      pos[i] = static_cast<char>(y_true[i] == c);
    }
    if (auto auc = detail::rank_auc(col, pos)) {
      sum += *auc;
      ++computed;
    }
  }
  if (computed == 0) return std::nullopt;
  return sum / static_cast<double>(computed);
}

/// Binary AUC of the positive-class scores (labels 0/1, 1 = positive).
/// Undefined when only one class is present.
inline std::optional<double> binary_auc(const std::vector<int>& y_true, const std::vector<double>& positive_scores) {
  if (y_true.size() != positive_scores.size()) throw std::invalid_argument("binary_auc: length mismatch");
  std::vector<char> pos(y_true.size());
  for (std::size_t i = 0; i < y_true.size(); ++i) pos[i] = static_cast<char>(y_true[i] == 1);
  return detail::rank_auc(positive_scores, pos);
}

/// Fraction of truly benign samples predicted as any non-benign class.
/// Undefined when the input contains no benign samples.
inline std::optional<double> benign_attack_fpr(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                               int benign_class) {
  if (y_true.size() != y_pred.size()) throw std::invalid_argument("benign_attack_fpr: length mismatch");
  long benign = 0, alarms = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] == benign_class) {
      ++benign;
      if (y_pred[i] != benign_class) ++alarms;
    }
  }
  if (benign == 0) return std::nullopt;
  return static_cast<double>(alarms) / static_cast<double>(benign);
}

/// (average, peak) over a whole run's per-round age snapshots.
inline std::pair<double, double> aoi_summary(const std::vector<std::vector<double>>& aoi_snapshots) {
  if (aoi_snapshots.empty()) throw std::invalid_argument("aoi_summary: no snapshots");
  double sum = 0.0, peak = 0.0;
  std::size_t count = 0;
  for (const auto& row : aoi_snapshots) {
    if (row.empty()) throw std::invalid_argument("aoi_summary: empty snapshot row");
    for (double a : row) {
      sum += a;
      peak = std::max(peak, a);
      ++count;
    }
  }
  return {sum / static_cast<double>(count), peak};
}

}  // namespace aoifl
