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
#include <fstream>
#include <initializer_list>
#include <nlohmann/json.hpp>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "aoifl/simulator.hpp"

namespace aoifl {

/// Invalid configuration: unknown key, bad type, or violated invariant. The
/// message carries the offending key path.
class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// How each grid cell's aggregator is chosen: per scenario (FedAvg for
/// clean/poison, trimmed mean for poison_robust) or forced to one kind.
enum class AggregatorRule { kScenarioDefault, kFedAvg, kTrimmedMean };

inline std::string to_string(AggregatorRule rule) {
  switch (rule) {
    case AggregatorRule::kScenarioDefault: return "scenario_default";
    case AggregatorRule::kFedAvg: return "fedavg";
    case AggregatorRule::kTrimmedMean: return "trimmed_mean";
  }
  throw std::logic_error("unknown AggregatorRule");
}

inline AggregatorRule aggregator_rule_from_string(const std::string& name) {
  if (name == "scenario_default") return AggregatorRule::kScenarioDefault;
  if (name == "fedavg") return AggregatorRule::kFedAvg;
  if (name == "trimmed_mean") return AggregatorRule::kTrimmedMean;
  throw std::invalid_argument("unknown aggregator kind '" + name + "'");
}

/// Parsed and validated experiment grid: the shared base configuration plus
/// the policy/scenario/seed axes and runner options.
struct RunManifest {
  std::string name = "experiment";
  std::string out_dir;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  int workers = 1;
  bool save_final_models = false;
  std::vector<PolicyKind> policies = {PolicyKind::kRandom, PolicyKind::kAoiFirst, PolicyKind::kUtilityFirst,
                                      PolicyKind::kHybrid};
  std::vector<Scenario> scenarios = {Scenario::kClean, Scenario::kPoison, Scenario::kPoisonRobust};
  AggregatorRule aggregator_rule = AggregatorRule::kScenarioDefault;
  /// Everything cells share; policy.kind, scenario, and aggregator.kind in
  /// here are placeholders overwritten per cell.
  ExperimentConfig base;

  bool operator==(const RunManifest&) const = default;
};

/// One resolved (scenario, policy) grid cell.
struct CellConfig {
  Scenario scenario;
  PolicyKind policy;
  ExperimentConfig config;
};

namespace detail {

using json = nlohmann::json;

inline void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* k) { return item.key() == k; }) == allowed.end())
      throw ConfigError(path.empty() ? "unknown key '" + item.key() + "'"
                                     : "unknown key '" + path + "." + item.key() + "'");
  }
}

inline std::string join_path(const std::string& path, const char* key) {
  return path.empty() ? key : path + "." + key;
}

inline double read_double(const json& obj, const std::string& path, const char* key, double def) {
  if (!obj.contains(key)) return def;
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(join_path(path, key) + ": expected a number");
  return v.get<double>();
}

inline int read_int(const json& obj, const std::string& path, const char* key, int def) {
  if (!obj.contains(key)) return def;
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(join_path(path, key) + ": expected an integer");
  return v.get<int>();
}

inline bool read_bool(const json& obj, const std::string& path, const char* key, bool def) {
  if (!obj.contains(key)) return def;
  const auto& v = obj.at(key);
  if (!v.is_boolean()) throw ConfigError(join_path(path, key) + ": expected a boolean");
  return v.get<bool>();
}

inline std::string read_string(const json& obj, const std::string& path, const char* key, const std::string& def) {
  if (!obj.contains(key)) return def;
  const auto& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(join_path(path, key) + ": expected a string");
  return v.get<std::string>();
}

inline std::pair<double, double> read_range(const json& obj, const std::string& path, const char* key,
                                            std::pair<double, double> def) {
  if (!obj.contains(key)) return def;
  const auto& v = obj.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ConfigError(join_path(path, key) + ": expected [min, max]");
  return {v[0].get<double>(), v[1].get<double>()};
}

inline std::vector<std::uint64_t> read_seed_list(const json& obj, const std::string& path, const char* key,
                                                 std::vector<std::uint64_t> def) {
  if (!obj.contains(key)) return def;
  const auto& v = obj.at(key);
  if (!v.is_array() || v.empty()) throw ConfigError(join_path(path, key) + ": expected a non-empty array");
  std::vector<std::uint64_t> out;
  for (const auto& e : v) {
    if (!e.is_number_integer() || (e.is_number_integer() && e.get<std::int64_t>() < 0))
      throw ConfigError(join_path(path, key) + ": expected nonnegative integers");
    out.push_back(e.get<std::uint64_t>());
  }
  return out;
}

inline std::vector<std::string> read_string_list(const json& obj, const std::string& path, const char* key,
                                                 std::vector<std::string> def, bool allow_empty = false) {
  if (!obj.contains(key)) return def;
  const auto& v = obj.at(key);
  if (!v.is_array() || (v.empty() && !allow_empty))
    throw ConfigError(join_path(path, key) + ": expected a non-empty array");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw ConfigError(join_path(path, key) + ": expected strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

inline std::uint64_t read_u64(const json& obj, const std::string& path, const char* key, std::uint64_t def) {
  if (!obj.contains(key)) return def;
  const auto& v = obj.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ConfigError(join_path(path, key) + ": expected a nonnegative integer");
}

inline std::set<int> read_int_set(const json& obj, const std::string& path, const char* key, std::set<int> def) {
  if (!obj.contains(key)) return def;
  const auto& v = obj.at(key);
  if (!v.is_array()) throw ConfigError(join_path(path, key) + ": expected an array of integers");
  std::set<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer()) throw ConfigError(join_path(path, key) + ": expected integers");
    out.insert(e.get<int>());
  }
  return out;
}

}  // namespace detail

/// Build the 12-or-fewer (scenario, policy) cells of a manifest, each with a
/// fully resolved and validated ExperimentConfig.
inline std::vector<CellConfig> resolve_cells(const RunManifest& manifest) {
  std::vector<CellConfig> cells;
  for (const Scenario scenario : manifest.scenarios) {
    for (const PolicyKind policy : manifest.policies) {
      CellConfig cell;
      cell.scenario = scenario;
      cell.policy = policy;
      cell.config = manifest.base;
      cell.config.scenario = scenario;
      cell.config.policy.kind = policy;
      switch (manifest.aggregator_rule) {
        case AggregatorRule::kScenarioDefault:
          cell.config.aggregator.kind =
              scenario == Scenario::kPoisonRobust ? AggregatorKind::kTrimmedMean : AggregatorKind::kFedAvg;
          break;
        case AggregatorRule::kFedAvg: cell.config.aggregator.kind = AggregatorKind::kFedAvg; break;
        case AggregatorRule::kTrimmedMean: cell.config.aggregator.kind = AggregatorKind::kTrimmedMean; break;
      }
      try {
        validate_experiment_config(cell.config);
      } catch (const std::invalid_argument& e) {
        throw ConfigError("cell (" + to_string(scenario) + ", " + to_string(policy) + "): " + e.what());
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

/// Parse a manifest from its JSON form: defaults applied, unknown keys
/// rejected, every grid cell validated before anything runs.
inline RunManifest parse_manifest_json(const nlohmann::json& root) {
  using detail::json;
  if (!root.is_object()) throw ConfigError("config root must be an object");
  detail::check_keys(root, "",
                     {"name",           "out_dir",       "seeds",          "workers",      "save_final_models",
                      "policies",       "scenarios",     "lambda",         "ema_beta",     "n_clients",
                      "rounds",         "clients_per_round", "dirichlet_alpha", "local_steps", "batch_size",
                      "learning_rate",  "bandwidth_range", "dropout_range", "rho",          "flip_prob",
                      "target_class",   "eval_every",    "bytes_per_param", "aggregator",  "dataset"});

  RunManifest m;
  m.name = detail::read_string(root, "", "name", m.name);
  m.out_dir = detail::read_string(root, "", "out_dir", m.out_dir);
  m.seeds = detail::read_seed_list(root, "", "seeds", m.seeds);
  m.workers = detail::read_int(root, "", "workers", m.workers);
  if (m.workers < 1) throw ConfigError("workers: must be >= 1");
  m.save_final_models = detail::read_bool(root, "", "save_final_models", m.save_final_models);

  {
    std::vector<std::string> names;
    for (const auto p : m.policies) names.push_back(to_string(p));
    names = detail::read_string_list(root, "", "policies", names);
    m.policies.clear();
    for (const auto& n : names) {
      try {
        m.policies.push_back(policy_from_string(n));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("policies: ") + e.what());
      }
    }
    std::set<PolicyKind> unique(m.policies.begin(), m.policies.end());
    if (unique.size() != m.policies.size()) throw ConfigError("policies: duplicate entries");
  }
  {
    std::vector<std::string> names;
    for (const auto s : m.scenarios) names.push_back(to_string(s));
    names = detail::read_string_list(root, "", "scenarios", names);
    m.scenarios.clear();
    for (const auto& n : names) {
      try {
        m.scenarios.push_back(scenario_from_string(n));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("scenarios: ") + e.what());
      }
    }
    std::set<Scenario> unique(m.scenarios.begin(), m.scenarios.end());
    if (unique.size() != m.scenarios.size()) throw ConfigError("scenarios: duplicate entries");
  }
  {
    std::set<std::uint64_t> unique(m.seeds.begin(), m.seeds.end());
    if (unique.size() != m.seeds.size()) throw ConfigError("seeds: duplicate entries");
  }

  ExperimentConfig& b = m.base;
  b.policy.lambda = detail::read_double(root, "", "lambda", b.policy.lambda);
  b.policy.ema_beta = detail::read_double(root, "", "ema_beta", b.policy.ema_beta);
  b.n_clients = detail::read_int(root, "", "n_clients", b.n_clients);
  b.rounds = detail::read_int(root, "", "rounds", b.rounds);
  b.clients_per_round = detail::read_int(root, "", "clients_per_round", b.clients_per_round);
  b.dirichlet_alpha = detail::read_double(root, "", "dirichlet_alpha", b.dirichlet_alpha);
  b.local_steps = detail::read_int(root, "", "local_steps", b.local_steps);
  b.batch_size = detail::read_int(root, "", "batch_size", b.batch_size);
  b.learning_rate = detail::read_double(root, "", "learning_rate", b.learning_rate);
  std::tie(b.bandwidth_min, b.bandwidth_max) =
      detail::read_range(root, "", "bandwidth_range", {b.bandwidth_min, b.bandwidth_max});
  std::tie(b.dropout_min, b.dropout_max) =
      detail::read_range(root, "", "dropout_range", {b.dropout_min, b.dropout_max});
  b.rho = detail::read_double(root, "", "rho", b.rho);
  b.flip_prob = detail::read_double(root, "", "flip_prob", b.flip_prob);
  b.target_class = detail::read_int(root, "", "target_class", b.target_class);
  b.eval_every = detail::read_int(root, "", "eval_every", b.eval_every);
  b.bytes_per_param = detail::read_int(root, "", "bytes_per_param", b.bytes_per_param);

  if (root.contains("aggregator")) {
    const auto& agg = root.at("aggregator");
    if (!agg.is_object()) throw ConfigError("aggregator: expected an object");
    detail::check_keys(agg, "aggregator", {"kind", "trim_ratio"});
    const std::string kind = detail::read_string(agg, "aggregator", "kind", to_string(m.aggregator_rule));
    try {
      m.aggregator_rule = aggregator_rule_from_string(kind);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("aggregator.kind: ") + e.what());
    }
    b.aggregator.trim_ratio = detail::read_double(agg, "aggregator", "trim_ratio", b.aggregator.trim_ratio);
  }

  if (root.contains("dataset")) {
    const auto& ds = root.at("dataset");
    if (!ds.is_object()) throw ConfigError("dataset: expected an object");
    const std::string kind = detail::read_string(ds, "dataset", "kind", "synthetic");
    if (kind == "synthetic") {
      b.dataset.kind = DatasetKind::kSynthetic;
      detail::check_keys(ds, "dataset",
                         {"kind", "n_train", "n_test", "n_features", "n_classes", "class_separation",
                          "drift_magnitude", "seed"});
      DriftGenConfig& g = b.dataset.synthetic;
      g.n_train = detail::read_int(ds, "dataset", "n_train", g.n_train);
      g.n_test = detail::read_int(ds, "dataset", "n_test", g.n_test);
      g.n_features = detail::read_int(ds, "dataset", "n_features", g.n_features);
      g.n_classes = detail::read_int(ds, "dataset", "n_classes", g.n_classes);
      g.class_separation = detail::read_double(ds, "dataset", "class_separation", g.class_separation);
      g.drift_magnitude = detail::read_double(ds, "dataset", "drift_magnitude", g.drift_magnitude);
      g.seed = detail::read_u64(ds, "dataset", "seed", g.seed);
      if (g.n_train < 1 || g.n_test < 1 || g.n_features < 1)
        throw ConfigError("dataset: n_train, n_test, n_features must be positive");
      if (g.n_classes < 2) throw ConfigError("dataset.n_classes: must be >= 2");
      if (g.class_separation < 0.0) throw ConfigError("dataset.class_separation: must be nonnegative");
      if (g.drift_magnitude < 0.0) throw ConfigError("dataset.drift_magnitude: must be nonnegative");
    } else if (kind == "csv") {
      b.dataset.kind = DatasetKind::kCsv;
      detail::check_keys(ds, "dataset",
                         {"kind", "train_path", "test_path", "label_column", "categorical_columns", "n_classes",
                          "benign_class", "class_names"});
      CsvSourceConfig& c = b.dataset.csv;
      c.train_path = detail::read_string(ds, "dataset", "train_path", c.train_path);
      c.test_path = detail::read_string(ds, "dataset", "test_path", c.test_path);
      c.label_column = detail::read_int(ds, "dataset", "label_column", c.label_column);
      c.categorical_columns = detail::read_int_set(ds, "dataset", "categorical_columns", c.categorical_columns);
      c.n_classes = detail::read_int(ds, "dataset", "n_classes", c.n_classes);
      c.benign_class = detail::read_int(ds, "dataset", "benign_class", c.benign_class);
      c.class_names = detail::read_string_list(ds, "dataset", "class_names", c.class_names, /*allow_empty=*/true);
      if (c.train_path.empty() || c.test_path.empty())
        throw ConfigError("dataset: train_path and test_path are required for csv datasets");
      if (c.label_column < 0) throw ConfigError("dataset.label_column: required, must be >= 0");
      if (c.n_classes < 2) throw ConfigError("dataset.n_classes: must be >= 2");
      if (c.benign_class < 0 || c.benign_class >= c.n_classes)
        throw ConfigError("dataset.benign_class: must be a valid class index");
      if (!c.class_names.empty() && static_cast<int>(c.class_names.size()) != c.n_classes)
        throw ConfigError("dataset.class_names: length must equal n_classes");
    } else {
      throw ConfigError("dataset.kind: expected 'synthetic' or 'csv'");
    }
  }

  resolve_cells(m);  // every cell validated eagerly; throws ConfigError
  return m;
}

inline RunManifest parse_config_text(const std::string& text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_manifest_json(root);
}

inline RunManifest parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

/// Serialize a manifest to the same JSON schema parse_config accepts;
/// parse(to_json(m)) == m.
inline nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json root;
  root["name"] = m.name;
  root["out_dir"] = m.out_dir;
  root["seeds"] = m.seeds;
  root["workers"] = m.workers;
  root["save_final_models"] = m.save_final_models;
  {
    std::vector<std::string> names;
    for (const auto p : m.policies) names.push_back(to_string(p));
    root["policies"] = names;
  }
  {
    std::vector<std::string> names;
    for (const auto s : m.scenarios) names.push_back(to_string(s));
    root["scenarios"] = names;
  }
  const ExperimentConfig& b = m.base;
  root["lambda"] = b.policy.lambda;
  root["ema_beta"] = b.policy.ema_beta;
  root["n_clients"] = b.n_clients;
  root["rounds"] = b.rounds;
  root["clients_per_round"] = b.clients_per_round;
  root["dirichlet_alpha"] = b.dirichlet_alpha;
  root["local_steps"] = b.local_steps;
  root["batch_size"] = b.batch_size;
  root["learning_rate"] = b.learning_rate;
  root["bandwidth_range"] = {b.bandwidth_min, b.bandwidth_max};
  root["dropout_range"] = {b.dropout_min, b.dropout_max};
  root["rho"] = b.rho;
  root["flip_prob"] = b.flip_prob;
  root["target_class"] = b.target_class;
  root["eval_every"] = b.eval_every;
  root["bytes_per_param"] = b.bytes_per_param;
  root["aggregator"] = {{"kind", to_string(m.aggregator_rule)}, {"trim_ratio", b.aggregator.trim_ratio}};
  if (b.dataset.kind == DatasetKind::kSynthetic) {
    const DriftGenConfig& g = b.dataset.synthetic;
    root["dataset"] = {{"kind", "synthetic"},
                       {"n_train", g.n_train},
                       {"n_test", g.n_test},
                       {"n_features", g.n_features},
                       {"n_classes", g.n_classes},
                       {"class_separation", g.class_separation},
                       {"drift_magnitude", g.drift_magnitude},
                       {"seed", g.seed}};
  } else {
    const CsvSourceConfig& c = b.dataset.csv;
    root["dataset"] = {{"kind", "csv"},
                       {"train_path", c.train_path},
                       {"test_path", c.test_path},
                       {"label_column", c.label_column},
                       {"categorical_columns", c.categorical_columns},
                       {"n_classes", c.n_classes},
                       {"benign_class", c.benign_class},
                       {"class_names", c.class_names}};
  }
  return root;
}

}  // namespace aoifl
