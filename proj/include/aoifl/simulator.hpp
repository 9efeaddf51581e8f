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
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "aoifl/aggregate.hpp"
#include "aoifl/client.hpp"
#include "aoifl/dataset.hpp"
#include "aoifl/metrics.hpp"
#include "aoifl/model.hpp"
#include "aoifl/partition.hpp"
#include "aoifl/poison.hpp"
#include "aoifl/rng.hpp"
#include "aoifl/scheduler.hpp"
#include "aoifl/synthetic.hpp"

namespace aoifl {

enum class Scenario { kClean, kPoison, kPoisonRobust };

inline std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::kClean: return "clean";
    case Scenario::kPoison: return "poison";
    case Scenario::kPoisonRobust: return "poison_robust";
  }
  throw std::logic_error("unknown Scenario");
}

inline Scenario scenario_from_string(const std::string& name) {
  if (name == "clean") return Scenario::kClean;
  if (name == "poison") return Scenario::kPoison;
  if (name == "poison_robust") return Scenario::kPoisonRobust;
  throw std::invalid_argument("unknown scenario '" + name + "'");
}

enum class AggregatorKind { kFedAvg, kTrimmedMean };

inline std::string to_string(AggregatorKind k) {
  return k == AggregatorKind::kFedAvg ? "fedavg" : "trimmed_mean";
}

inline AggregatorKind aggregator_from_string(const std::string& name) {
  if (name == "fedavg") return AggregatorKind::kFedAvg;
  if (name == "trimmed_mean") return AggregatorKind::kTrimmedMean;
  throw std::invalid_argument("unknown aggregator '" + name + "'");
}

struct AggregatorConfig {
  AggregatorKind kind = AggregatorKind::kFedAvg;
  double trim_ratio = 0.2;

  bool operator==(const AggregatorConfig&) const = default;
};

/// Where training data comes from: the in-memory drift generator or a pair
/// of CSV files described by a schema.
struct CsvSourceConfig {
  std::string train_path;
  std::string test_path;
  int label_column = -1;
  std::set<int> categorical_columns;
  int n_classes = 2;
  int benign_class = 0;
  std::vector<std::string> class_names;

  bool operator==(const CsvSourceConfig&) const = default;
};

enum class DatasetKind { kSynthetic, kCsv };

struct DatasetSource {
  DatasetKind kind = DatasetKind::kSynthetic;
  DriftGenConfig synthetic;
  CsvSourceConfig csv;

  bool operator==(const DatasetSource&) const = default;
};

/// Full description of one simulation cell. Defaults are the desk-scale
/// reference configuration.
struct ExperimentConfig {
  int n_clients = 50;
  int rounds = 60;
  int clients_per_round = 10;
  double dirichlet_alpha = 0.3;
  int local_steps = 20;
  int batch_size = 128;
  double learning_rate = 0.2;
  double bandwidth_min = 5.0;
  double bandwidth_max = 50.0;
  double dropout_min = 0.0;
  double dropout_max = 0.25;
  /// Malicious client fraction in the poison scenarios.
  double rho = 0.2;
  double flip_prob = 0.3;
  int target_class = 1;
  PolicyConfig policy;
  AggregatorConfig aggregator;
  Scenario scenario = Scenario::kClean;
  int eval_every = 1;
  int bytes_per_param = 4;
  DatasetSource dataset;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Throws std::invalid_argument naming the offending field.
inline void validate_experiment_config(const ExperimentConfig& c) {
  if (c.n_clients < 1) throw std::invalid_argument("n_clients: must be >= 1");
  if (c.rounds < 1) throw std::invalid_argument("rounds: must be >= 1");
  if (c.clients_per_round < 1 || c.clients_per_round > c.n_clients)
    throw std::invalid_argument("clients_per_round: must be in [1, n_clients]");
  if (c.dirichlet_alpha <= 0.0) throw std::invalid_argument("dirichlet_alpha: must be positive");
  if (c.local_steps < 0) throw std::invalid_argument("local_steps: must be >= 0");
  if (c.batch_size < 1) throw std::invalid_argument("batch_size: must be >= 1");
  if (c.learning_rate <= 0.0) throw std::invalid_argument("learning_rate: must be positive");
  if (c.bandwidth_min <= 0.0 || c.bandwidth_max < c.bandwidth_min)
    throw std::invalid_argument("bandwidth range: need 0 < min <= max");
  if (c.dropout_min < 0.0 || c.dropout_max < c.dropout_min || c.dropout_max > 1.0)
    throw std::invalid_argument("dropout range: need 0 <= min <= max <= 1");
  if (c.rho < 0.0 || c.rho > 1.0) throw std::invalid_argument("rho: must be in [0, 1]");
  if (c.flip_prob < 0.0 || c.flip_prob > 1.0) throw std::invalid_argument("flip_prob: must be in [0, 1]");
  if (c.policy.lambda < 0.0 || c.policy.lambda > 1.0) throw std::invalid_argument("policy.lambda: must be in [0, 1]");
  if (c.policy.ema_beta <= 0.0 || c.policy.ema_beta > 1.0)
    throw std::invalid_argument("policy.ema_beta: must be in (0, 1]");
  if (c.aggregator.trim_ratio < 0.0 || c.aggregator.trim_ratio >= 0.5)
    throw std::invalid_argument("aggregator.trim_ratio: must be in [0, 0.5)");
  if (c.scenario == Scenario::kPoisonRobust && c.aggregator.kind != AggregatorKind::kTrimmedMean)
    throw std::invalid_argument("scenario: poison_robust requires the trimmed_mean aggregator");
  if (c.eval_every < 1) throw std::invalid_argument("eval_every: must be >= 1");
  if (c.bytes_per_param < 1) throw std::invalid_argument("bytes_per_param: must be >= 1");
  const int n_classes =
      c.dataset.kind == DatasetKind::kSynthetic ? c.dataset.synthetic.n_classes : c.dataset.csv.n_classes;
  if (c.target_class < 0 || c.target_class >= n_classes)
    throw std::invalid_argument("target_class: must be a valid class index");
}

struct EvalMetrics {
  double macro_f1 = 0.0;
  std::optional<double> auc;
  std::optional<double> fpr;
};

/// Everything observable about one round.
struct RoundRecord {
  int round = 0;
  std::vector<int> selected;
  std::vector<int> delivered;
  std::vector<double> aoi_snapshot;
  double instant_avg_aoi = 0.0;
  double instant_peak_aoi = 0.0;
  std::int64_t comm_bytes = 0;
  std::optional<EvalMetrics> eval;
};

/// One seed's full trajectory and summary statistics.
struct SeedSummary {
  std::uint64_t seed = 0;
  std::vector<RoundRecord> rounds;
  double avg_aoi = 0.0;
  double peak_aoi = 0.0;
  std::int64_t total_comm_bytes = 0;
  EvalMetrics final_eval;
  SoftmaxModel final_model;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

/// Cross-seed aggregation. AUC and FPR are aggregated over the seeds where
/// they are defined and absent if no seed defines them. Peak AoI is the mean
/// of per-run peaks; comm is in binary megabytes.
struct ExperimentResult {
  std::vector<SeedSummary> per_seed;
  MeanStd macro_f1;
  std::optional<MeanStd> auc;
  std::optional<MeanStd> fpr;
  MeanStd avg_aoi;
  MeanStd peak_aoi;
  MeanStd comm_mb;
};

/// Preprocessed train/test pair ready for training; sample_time carries the
/// generator time per train sample (empty for CSV sources).
struct PreparedData {
  Dataset train;
  Dataset test;
  std::vector<double> sample_time;
};

/// Build and preprocess the dataset for one run. Synthetic data is
/// regenerated per seed; CSV data is identical across seeds but still passes
/// through the train-fitted preprocessor.
inline PreparedData prepare_data(const DatasetSource& source, std::uint64_t seed) {
  Dataset raw_train, raw_test;
  PreparedData out;
  if (source.kind == DatasetKind::kSynthetic) {
    DriftGenConfig cfg = source.synthetic;
    cfg.seed = seed;
    SyntheticData data = generate_synthetic_drift(cfg);
    raw_train = std::move(data.train);
    raw_test = std::move(data.test);
    out.sample_time = std::move(data.sample_time);
  } else {
    FeatureSchema schema;
    schema.label_column = source.csv.label_column;
    schema.categorical_columns = source.csv.categorical_columns;
    schema.n_classes = source.csv.n_classes;
    schema.benign_class = source.csv.benign_class;
    schema.class_names = source.csv.class_names;
    raw_train = load_tabular_csv(source.csv.train_path, schema);
    raw_test = load_tabular_csv(source.csv.test_path, schema);
  }
  const PreprocessorParams params = fit_preprocessor(raw_train);
  out.train = apply_preprocessor(raw_train, params);
  out.test = apply_preprocessor(raw_test, params);
  return out;
}

/// Draw the client fleet: bandwidth and dropout uniform per client, then (in
/// the poison scenarios only) a uniformly random subset of round(rho * N)
/// clients flagged malicious. The malicious draw happens after all
/// bandwidth/dropout draws, so fleets agree across scenarios at equal seeds.
inline std::vector<ClientProfile> sample_profiles(int n_clients, double bw_lo, double bw_hi, double drop_lo,
                                                  double drop_hi, double rho, Scenario scenario, RngStream& rng) {
  if (n_clients < 1) throw std::invalid_argument("sample_profiles: n_clients must be >= 1");
  std::vector<ClientProfile> profiles(static_cast<std::size_t>(n_clients));
  for (auto& p : profiles) {
    p.bandwidth_mbps = rng.uniform(bw_lo, bw_hi);
    p.dropout_prob = rng.uniform(drop_lo, drop_hi);
  }
  if (scenario != Scenario::kClean) {
    const auto n_malicious = static_cast<std::size_t>(std::llround(rho * n_clients));
    std::vector<int> ids(static_cast<std::size_t>(n_clients));
    for (int i = 0; i < n_clients; ++i) ids[static_cast<std::size_t>(i)] = i;
    rng.shuffle(ids);
    for (std::size_t i = 0; i < n_malicious && i < ids.size(); ++i)
      profiles[static_cast<std::size_t>(ids[i])].malicious = true;
  }
  return profiles;
}

/// Every selected client downloads the model; only delivered clients upload.
inline std::int64_t comm_bytes_for_round(std::int64_t param_count, int n_selected, int n_delivered,
                                         int bytes_per_param) {
  if (n_delivered > n_selected) throw std::invalid_argument("comm_bytes_for_round: delivered > selected");
  return static_cast<std::int64_t>(bytes_per_param) * param_count * (n_selected + n_delivered);
}

/// Test-set metrics of a model: macro F1 over argmax predictions, AUC
/// (binary with the attack class as positive for 2-class data, macro
/// one-vs-rest otherwise), and benign-vs-attack FPR.
inline EvalMetrics evaluate(const SoftmaxModel& model, const Dataset& test) {
  const Eigen::MatrixXd probs = predict_proba(model, test.features);
  const std::vector<int> preds = argmax_predictions(probs);
  EvalMetrics out;
  const int n_classes = test.schema.n_classes;
  out.macro_f1 = macro_f1(test.labels, preds, n_classes);
  if (n_classes == 2) {
    const int attack = 1 - test.schema.benign_class;
    std::vector<int> is_attack(test.labels.size());
    std::vector<double> attack_scores(test.labels.size());
    for (std::size_t i = 0; i < test.labels.size(); ++i) {
      is_attack[i] = test.labels[i] == attack ? 1 : 0;
      attack_scores[i] = probs(static_cast<Eigen::Index>(i), attack);
    }
    out.auc = binary_auc(is_attack, attack_scores);
  } else {
    out.auc = macro_ovr_auc(test.labels, probs, n_classes);
  }
  out.fpr = benign_attack_fpr(test.labels, preds, test.schema.benign_class);
  return out;
}

/// One synchronous round: snapshot ages, select, drop, train survivors,
/// aggregate (or carry the global over when nobody survives), record
/// deliveries, account communication, evaluate on schedule. Randomness comes
/// from per-purpose streams derived from (seed, round, client), so the
/// trajectory is independent of evaluation cadence.
inline RoundRecord simulate_round(int t, SoftmaxModel& global, SchedulerState& state,
                                  const std::vector<ClientProfile>& profiles,
                                  const std::unordered_map<int, PoisonOverlay>& overlays,
                                  const ExperimentConfig& config, const PreparedData& data, std::uint64_t seed) {
  RoundRecord rec;
  rec.round = t;
  rec.aoi_snapshot = aoi_vector(state, t);
  double sum = 0.0, peak = 0.0;
  for (double a : rec.aoi_snapshot) {
    sum += a;
    peak = std::max(peak, a);
  }
  rec.instant_avg_aoi = sum / static_cast<double>(rec.aoi_snapshot.size());
  rec.instant_peak_aoi = peak;

  RngStream select_rng(derive_seed(seed, "select", static_cast<std::uint64_t>(t)));
  rec.selected = select_clients(config.policy, state, profiles, t, config.clients_per_round, select_rng);

  for (const int c : rec.selected) {
    RngStream drop_rng(derive_seed(seed, "dropout", static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(c)));
    if (drop_rng.uniform() >= profiles[static_cast<std::size_t>(c)].dropout_prob) rec.delivered.push_back(c);
  }

  std::vector<ClientUpdate> updates;
  std::vector<double> initial_losses;
  updates.reserve(rec.delivered.size());
  for (const int c : rec.delivered) {
    const auto& profile = profiles[static_cast<std::size_t>(c)];
    const PoisonOverlay* overlay = nullptr;
    if (profile.malicious && config.scenario != Scenario::kClean) {
      const auto it = overlays.find(c);
      if (it != overlays.end()) overlay = &it->second;
    }
    RngStream batch_rng(derive_seed(seed, "batch", static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(c)));
    TrainReport report = local_train(global, data.train, profile.shard, overlay, config.local_steps,
                                     config.batch_size, config.learning_rate, batch_rng);
    updates.push_back(ClientUpdate{std::move(report.updated_model), static_cast<double>(report.sample_count), c});
    initial_losses.push_back(report.initial_loss);
  }

  if (!updates.empty()) {
    global = config.aggregator.kind == AggregatorKind::kFedAvg
                 ? fedavg_aggregate(updates)
                 : trimmed_mean_aggregate(updates, config.aggregator.trim_ratio);
  }

  for (std::size_t i = 0; i < rec.delivered.size(); ++i) {
    const int c = rec.delivered[i];
    mark_delivered(state, c, t, initial_losses[i], profiles[static_cast<std::size_t>(c)], config.policy.ema_beta);
  }

  const std::int64_t params = global.param_count();
  rec.comm_bytes = comm_bytes_for_round(params, static_cast<int>(rec.selected.size()),
                                        static_cast<int>(rec.delivered.size()), config.bytes_per_param);

  if (t % config.eval_every == 0 || t == config.rounds) rec.eval = evaluate(global, data.test);
  return rec;
}

/// Round loop over prepared data and a fully built fleet (shards attached).
/// Exposed separately so callers can inject hand-built fleets.
inline SeedSummary run_rounds(const ExperimentConfig& config, const PreparedData& data,
                              const std::vector<ClientProfile>& profiles, std::uint64_t seed) {
  if (static_cast<int>(profiles.size()) != config.n_clients)
    throw std::invalid_argument("run_rounds: profile count mismatch");

  std::unordered_map<int, PoisonOverlay> overlays;
  if (config.scenario != Scenario::kClean) {
    for (int c = 0; c < config.n_clients; ++c) {
      if (!profiles[static_cast<std::size_t>(c)].malicious) continue;
      RngStream poison_rng(derive_seed(seed, "poison", static_cast<std::uint64_t>(c)));
      overlays.emplace(c, apply_label_flip(data.train, profiles[static_cast<std::size_t>(c)].shard,
                                           config.target_class, config.flip_prob, poison_rng));
    }
  }

  SeedSummary summary;
  summary.seed = seed;
  SchedulerState state(config.n_clients);
  SoftmaxModel global = init_model(data.train.n_features(), data.train.schema.n_classes);

  std::vector<std::vector<double>> snapshots;
  snapshots.reserve(static_cast<std::size_t>(config.rounds));
  for (int t = 1; t <= config.rounds; ++t) {
    RoundRecord rec = simulate_round(t, global, state, profiles, overlays, config, data, seed);
    summary.total_comm_bytes += rec.comm_bytes;
    snapshots.push_back(rec.aoi_snapshot);
    summary.rounds.push_back(std::move(rec));
  }

  const auto [avg, peak] = aoi_summary(snapshots);
  summary.avg_aoi = avg;
  summary.peak_aoi = peak;
  summary.final_eval = *summary.rounds.back().eval;
  summary.final_model = std::move(global);
  return summary;
}

/// Partition the training data and draw the client fleet for one run; the
/// returned profiles carry their shards.
inline std::vector<ClientProfile> build_fleet(const ExperimentConfig& config, const PreparedData& data,
                                              std::uint64_t seed) {
  RngStream partition_rng(derive_seed(seed, "partition"));
  std::vector<ClientShard> shards =
      dirichlet_partition(data.train.labels, data.train.schema.n_classes, config.n_clients, config.dirichlet_alpha,
                          partition_rng, data.sample_time.empty() ? nullptr : &data.sample_time);

  RngStream profile_rng(derive_seed(seed, "profiles"));
  std::vector<ClientProfile> profiles =
      sample_profiles(config.n_clients, config.bandwidth_min, config.bandwidth_max, config.dropout_min,
                      config.dropout_max, config.rho, config.scenario, profile_rng);
  for (int c = 0; c < config.n_clients; ++c)
    profiles[static_cast<std::size_t>(c)].shard = std::move(shards[static_cast<std::size_t>(c)]);
  return profiles;
}

/// One full run: build data, partition, fleet, then loop the rounds.
inline SeedSummary run_experiment(const ExperimentConfig& config, std::uint64_t seed) {
  validate_experiment_config(config);
  PreparedData data = prepare_data(config.dataset, seed);
  std::vector<ClientProfile> profiles = build_fleet(config, data, seed);
  return run_rounds(config, data, profiles, seed);
}

namespace detail {

inline MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return out;
}

inline std::optional<MeanStd> optional_mean_std(const std::vector<std::optional<double>>& values) {
  std::vector<double> defined;
  for (const auto& v : values)
    if (v) defined.push_back(*v);
  if (defined.empty()) return std::nullopt;
  return mean_std(defined);
}

}  // namespace detail

/// Cross-seed statistics from already-computed runs: mean and sample
/// standard deviation (0 for a single run) of final macro F1 / AUC / FPR,
/// whole-run average AoI, per-run peak AoI, and total communication in
/// binary megabytes.
inline ExperimentResult aggregate_summaries(std::vector<SeedSummary> summaries) {
  if (summaries.empty()) throw std::invalid_argument("aggregate_summaries: need at least one run");
  ExperimentResult result;
  std::vector<double> f1s, avgs, peaks, comms;
  std::vector<std::optional<double>> aucs, fprs;
  for (auto& summary : summaries) {
    f1s.push_back(summary.final_eval.macro_f1);
    aucs.push_back(summary.final_eval.auc);
    fprs.push_back(summary.final_eval.fpr);
    avgs.push_back(summary.avg_aoi);
    peaks.push_back(summary.peak_aoi);
    comms.push_back(static_cast<double>(summary.total_comm_bytes) / (1024.0 * 1024.0));
    result.per_seed.push_back(std::move(summary));
  }
  result.macro_f1 = detail::mean_std(f1s);
  result.auc = detail::optional_mean_std(aucs);
  result.fpr = detail::optional_mean_std(fprs);
  result.avg_aoi = detail::mean_std(avgs);
  result.peak_aoi = detail::mean_std(peaks);
  result.comm_mb = detail::mean_std(comms);
  return result;
}

/// Run every seed and aggregate the results.
inline ExperimentResult run_seeds(const ExperimentConfig& config, const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw std::invalid_argument("run_seeds: need at least one seed");
  std::vector<SeedSummary> summaries;
  summaries.reserve(seeds.size());
  for (const auto seed : seeds) summaries.push_back(run_experiment(config, seed));
  return aggregate_summaries(std::move(summaries));
}

}  // namespace aoifl
