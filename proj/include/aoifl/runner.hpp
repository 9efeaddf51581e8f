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

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "aoifl/manifest.hpp"
#include "aoifl/simulator.hpp"

namespace aoifl {
namespace detail {

inline std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

inline std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

inline std::string join_ids(const std::vector<int>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out.push_back(' ');
    out += std::to_string(ids[i]);
  }
  return out;
}

inline std::string iso_utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

/// Run task(0..n-1) on up to `workers` threads. Tasks must not throw.
inline void run_parallel(std::size_t n_tasks, int workers, const std::function<void(std::size_t)>& task) {
  const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n_tasks);
  if (n_workers <= 1) {
    for (std::size_t i = 0; i < n_tasks; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (std::size_t w = 0; w < n_workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n_tasks) return;
        task(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

/// Seed-keyed cache of prepared datasets; the data for one seed is shared
/// read-only by every cell that uses that seed.
class DataCache {
 public:
  explicit DataCache(const DatasetSource& source) : source_(source) {}

  std::shared_ptr<const PreparedData> get(std::uint64_t seed) {
    std::lock_guard<std::mutex> lock(mu_);
    auto& slot = cache_[seed];
    if (!slot) slot = std::make_shared<const PreparedData>(prepare_data(source_, seed));
    return slot;
  }

 private:
  DatasetSource source_;
  std::mutex mu_;
  std::unordered_map<std::uint64_t, std::shared_ptr<const PreparedData>> cache_;
};

inline nlohmann::json eval_to_json(const EvalMetrics& e) {
  nlohmann::json j;
  j["macro_f1"] = e.macro_f1;
  j["auc"] = e.auc ? nlohmann::json(*e.auc) : nlohmann::json(nullptr);
  j["fpr"] = e.fpr ? nlohmann::json(*e.fpr) : nlohmann::json(nullptr);
  return j;
}

/// Per-seed-run artifacts: the round log, the plot trajectory, the summary,
/// and optionally the final model checkpoint.
inline void write_seed_outputs(const std::filesystem::path& dir, const std::string& policy,
                               const std::string& scenario, const SeedSummary& s, bool save_model) {
  std::string rounds_csv =
      "seed,round,policy,scenario,selected_ids,delivered_ids,instant_avg_aoi,instant_peak_aoi,comm_bytes,"
      "macro_f1,auc,fpr\n";
  std::string trajectory_csv = "round,macro_f1,instant_avg_aoi\n";
  for (const auto& r : s.rounds) {
    rounds_csv += std::to_string(s.seed) + "," + std::to_string(r.round) + "," + policy + "," + scenario + "," +
                  join_ids(r.selected) + "," + join_ids(r.delivered) + "," + fmt(r.instant_avg_aoi) + "," +
                  fmt(r.instant_peak_aoi) + "," + std::to_string(r.comm_bytes) + ",";
    if (r.eval) {
      rounds_csv += fmt(r.eval->macro_f1) + "," + fmt(r.eval->auc) + "," + fmt(r.eval->fpr);
    } else {
      rounds_csv += ",,";
    }
    rounds_csv += "\n";
    trajectory_csv += std::to_string(r.round) + "," + (r.eval ? fmt(r.eval->macro_f1) : "") + "," +
                      fmt(r.instant_avg_aoi) + "\n";
  }
  write_text(dir / "rounds.csv", rounds_csv);
  write_text(dir / "trajectory.csv", trajectory_csv);

  nlohmann::json j;
  j["seed"] = s.seed;
  j["policy"] = policy;
  j["scenario"] = scenario;
  j["avg_aoi"] = s.avg_aoi;
  j["peak_aoi"] = s.peak_aoi;
  j["total_comm_bytes"] = s.total_comm_bytes;
  j["comm_mb"] = static_cast<double>(s.total_comm_bytes) / (1024.0 * 1024.0);
  j["final"] = eval_to_json(s.final_eval);
  write_text(dir / "summary.json", j.dump(2) + "\n");

  if (save_model) aoifl::save_model(s.final_model, (dir / "final_model.bin").string());
}

inline std::string mean_std_csv(const MeanStd& m) { return fmt(m.mean) + "," + fmt(m.std); }

inline std::string mean_std_csv(const std::optional<MeanStd>& m) {
  return m ? mean_std_csv(*m) : std::string(",");
}

inline nlohmann::json mean_std_json(const MeanStd& m) { return {{"mean", m.mean}, {"std", m.std}}; }

inline nlohmann::json mean_std_json(const std::optional<MeanStd>& m) {
  return m ? mean_std_json(*m) : nlohmann::json(nullptr);
}

}  // namespace detail

/// Aggregated outcome of one (scenario, policy) grid combination.
struct GridRow {
  Scenario scenario;
  PolicyKind policy;
  ExperimentResult result;
};

/// Table row order follows the manifest's scenario and policy lists.
inline void write_grid_outputs(const std::filesystem::path& out_dir, const std::vector<GridRow>& rows) {
  std::string grid_csv =
      "scenario,policy,macro_f1_mean,macro_f1_std,auc_mean,auc_std,fpr_mean,fpr_std,avg_aoi_mean,avg_aoi_std,"
      "peak_aoi_mean,peak_aoi_std,comm_mb_mean,comm_mb_std\n";
  std::string points_csv = "scenario,policy,macro_f1_mean,macro_f1_std,avg_aoi_mean,avg_aoi_std\n";
  nlohmann::json grid_json = nlohmann::json::array();
  for (const auto& row : rows) {
    const std::string scenario = to_string(row.scenario);
    const std::string policy = to_string(row.policy);
    const auto& r = row.result;
    grid_csv += scenario + "," + policy + "," + detail::mean_std_csv(r.macro_f1) + "," + detail::mean_std_csv(r.auc) +
                "," + detail::mean_std_csv(r.fpr) + "," + detail::mean_std_csv(r.avg_aoi) + "," +
                detail::mean_std_csv(r.peak_aoi) + "," + detail::mean_std_csv(r.comm_mb) + "\n";
    points_csv += scenario + "," + policy + "," + detail::mean_std_csv(r.macro_f1) + "," +
                  detail::mean_std_csv(r.avg_aoi) + "\n";
    nlohmann::json j;
    j["scenario"] = scenario;
    j["policy"] = policy;
    j["macro_f1"] = detail::mean_std_json(r.macro_f1);
    j["auc"] = detail::mean_std_json(r.auc);
    j["fpr"] = detail::mean_std_json(r.fpr);
    j["avg_aoi"] = detail::mean_std_json(r.avg_aoi);
    j["peak_aoi"] = detail::mean_std_json(r.peak_aoi);
    j["comm_mb"] = detail::mean_std_json(r.comm_mb);
    grid_json.push_back(std::move(j));
  }
  detail::write_text(out_dir / "grid_summary.csv", grid_csv);
  detail::write_text(out_dir / "grid_summary.json", grid_json.dump(2) + "\n");
  detail::write_text(out_dir / "points.csv", points_csv);
}

/// Run the full manifest grid: every (scenario, policy, seed) run in its own
/// directory under out_dir, cross-seed tables at the top level, timestamps
/// confined to run_meta.json. Failed runs are reported and skipped in the
/// tables; the return value is the process exit code (0 all good, 2 any
/// failure).
inline int execute(const RunManifest& manifest) {
  if (manifest.out_dir.empty()) throw ConfigError("out_dir: required (set in config, via flag, or environment)");
  const auto started_at = detail::iso_utc_now();
  const auto t0 = std::chrono::steady_clock::now();

  const std::vector<CellConfig> cells = resolve_cells(manifest);
  const std::filesystem::path out_dir(manifest.out_dir);
  std::filesystem::create_directories(out_dir);
  detail::write_text(out_dir / "manifest.json", to_json(manifest).dump(2) + "\n");

  struct Task {
    std::size_t cell;
    std::size_t seed_index;
    std::filesystem::path dir;
  };
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::size_t s = 0; s < manifest.seeds.size(); ++s) {
      const auto dir = out_dir / to_string(cells[c].scenario) / to_string(cells[c].policy) /
                       ("seed_" + std::to_string(manifest.seeds[s]));
      std::filesystem::create_directories(dir);
      tasks.push_back(Task{c, s, dir});
    }
  }

  detail::DataCache cache(manifest.base.dataset);
  std::vector<std::optional<SeedSummary>> summaries(tasks.size());
  std::vector<std::string> failures(tasks.size());
  detail::run_parallel(tasks.size(), manifest.workers, [&](std::size_t i) {
    const Task& task = tasks[i];
    const CellConfig& cell = cells[task.cell];
    const std::uint64_t seed = manifest.seeds[task.seed_index];
    try {
      const auto data = cache.get(seed);
      const auto profiles = build_fleet(cell.config, *data, seed);
      SeedSummary summary = run_rounds(cell.config, *data, profiles, seed);
      detail::write_seed_outputs(task.dir, to_string(cell.policy), to_string(cell.scenario), summary,
                                 manifest.save_final_models);
      summaries[i] = std::move(summary);
    } catch (const std::exception& e) {
      failures[i] = to_string(cell.scenario) + "/" + to_string(cell.policy) + "/seed_" +
                    std::to_string(seed) + ": " + e.what();
    }
  });

  std::vector<GridRow> rows;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::vector<SeedSummary> cell_summaries;
    bool complete = true;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (tasks[i].cell != c) continue;
      if (summaries[i])
        cell_summaries.push_back(*summaries[i]);
      else
        complete = false;
    }
    if (complete) rows.push_back(GridRow{cells[c].scenario, cells[c].policy, aggregate_summaries(cell_summaries)});
  }
  write_grid_outputs(out_dir, rows);

  std::vector<std::string> failure_list;
  for (const auto& f : failures)
    if (!f.empty()) failure_list.push_back(f);

  nlohmann::json meta;
  meta["name"] = manifest.name;
  meta["started_at"] = started_at;
  meta["finished_at"] = detail::iso_utc_now();
  meta["elapsed_seconds"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count() / 1000.0;
  meta["seed_runs"] = tasks.size();
  meta["failures"] = failure_list;
  detail::write_text(out_dir / "run_meta.json", meta.dump(2) + "\n");

  for (const auto& row : rows) {
    std::cout << to_string(row.scenario) << "/" << to_string(row.policy)
              << "  macro_f1=" << detail::fmt(row.result.macro_f1.mean)
              << "  avg_aoi=" << detail::fmt(row.result.avg_aoi.mean)
              << "  peak_aoi=" << detail::fmt(row.result.peak_aoi.mean)
              << "  comm_mb=" << detail::fmt(row.result.comm_mb.mean) << "\n";
  }
  for (const auto& f : failure_list) std::cerr << "FAILED " << f << "\n";
  return failure_list.empty() ? 0 : 2;
}

/// Sensitivity sweep over the hybrid policy's lambda. The manifest's first
/// scenario is used (its aggregator resolved by the usual rule); each lambda
/// runs the full seed list; rows hold cross-seed means.
inline int lambda_sweep(const RunManifest& manifest, const std::vector<double>& lambdas) {
  if (manifest.out_dir.empty()) throw ConfigError("out_dir: required (set in config, via flag, or environment)");
  if (lambdas.empty()) throw ConfigError("lambdas: need at least one value");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (lambdas[i] < 0.0 || lambdas[i] > 1.0) throw ConfigError("lambdas: values must be in [0, 1]");
    for (std::size_t j = i + 1; j < lambdas.size(); ++j)
      if (lambdas[i] == lambdas[j]) throw ConfigError("lambdas: duplicate value " + detail::fmt(lambdas[i]));
  }
  if (std::find(manifest.policies.begin(), manifest.policies.end(), PolicyKind::kHybrid) == manifest.policies.end())
    throw ConfigError("policies: lambda sweep requires the hybrid policy");

  const auto started_at = detail::iso_utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario scenario = manifest.scenarios.front();

  std::vector<ExperimentConfig> configs;
  for (const double lambda : lambdas) {
    RunManifest one = manifest;
    one.policies = {PolicyKind::kHybrid};
    one.scenarios = {scenario};
    one.base.policy.lambda = lambda;
    configs.push_back(resolve_cells(one).front().config);
  }

  const std::filesystem::path out_dir(manifest.out_dir);
  std::filesystem::create_directories(out_dir);
  detail::write_text(out_dir / "manifest.json", to_json(manifest).dump(2) + "\n");

  struct Task {
    std::size_t lambda_index;
    std::size_t seed_index;
    std::filesystem::path dir;
  };
  std::vector<Task> tasks;
  for (std::size_t li = 0; li < lambdas.size(); ++li) {
    for (std::size_t s = 0; s < manifest.seeds.size(); ++s) {
      const auto dir = out_dir / ("lambda_" + detail::fmt(lambdas[li])) /
                       ("seed_" + std::to_string(manifest.seeds[s]));
      std::filesystem::create_directories(dir);
      tasks.push_back(Task{li, s, dir});
    }
  }

  detail::DataCache cache(manifest.base.dataset);
  std::vector<std::optional<SeedSummary>> summaries(tasks.size());
  std::vector<std::string> failures(tasks.size());
  detail::run_parallel(tasks.size(), manifest.workers, [&](std::size_t i) {
    const Task& task = tasks[i];
    const ExperimentConfig& config = configs[task.lambda_index];
    const std::uint64_t seed = manifest.seeds[task.seed_index];
    try {
      const auto data = cache.get(seed);
      const auto profiles = build_fleet(config, *data, seed);
      SeedSummary summary = run_rounds(config, *data, profiles, seed);
      detail::write_seed_outputs(task.dir, to_string(PolicyKind::kHybrid), to_string(scenario), summary,
                                 manifest.save_final_models);
      summaries[i] = std::move(summary);
    } catch (const std::exception& e) {
      failures[i] = "lambda_" + detail::fmt(lambdas[task.lambda_index]) + "/seed_" + std::to_string(seed) + ": " +
                    e.what();
    }
  });

  std::string sweep_csv = "lambda,macro_f1,avg_aoi,peak_aoi,comm_mb\n";
  for (std::size_t li = 0; li < lambdas.size(); ++li) {
    std::vector<SeedSummary> lam_summaries;
    bool complete = true;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (tasks[i].lambda_index != li) continue;
      if (summaries[i])
        lam_summaries.push_back(*summaries[i]);
      else
        complete = false;
    }
    if (!complete) continue;
    const ExperimentResult r = aggregate_summaries(std::move(lam_summaries));
    sweep_csv += detail::fmt(lambdas[li]) + "," + detail::fmt(r.macro_f1.mean) + "," + detail::fmt(r.avg_aoi.mean) +
                 "," + detail::fmt(r.peak_aoi.mean) + "," + detail::fmt(r.comm_mb.mean) + "\n";
  }
  detail::write_text(out_dir / "lambda_sweep.csv", sweep_csv);

  std::vector<std::string> failure_list;
  for (const auto& f : failures)
    if (!f.empty()) failure_list.push_back(f);

  nlohmann::json meta;
  meta["name"] = manifest.name;
  meta["started_at"] = started_at;
  meta["finished_at"] = detail::iso_utc_now();
  meta["elapsed_seconds"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count() / 1000.0;
  meta["seed_runs"] = tasks.size();
  meta["failures"] = failure_list;
  detail::write_text(out_dir / "run_meta.json", meta.dump(2) + "\n");

  std::cout << sweep_csv;
  for (const auto& f : failure_list) std::cerr << "FAILED " << f << "\n";
  return failure_list.empty() ? 0 : 2;
}

/// Generate the synthetic dataset a manifest describes and export it as CSV
/// (train.csv, test.csv, sample_time.csv) for inspection. The generator seed
/// is dataset.seed when set, else the manifest's first run seed, so exports
/// match what the first run trains on.
inline int gen_synthetic(const RunManifest& manifest, const std::string& out) {
  if (manifest.base.dataset.kind != DatasetKind::kSynthetic)
    throw ConfigError("dataset.kind: gen-synthetic requires a synthetic dataset");
  DriftGenConfig cfg = manifest.base.dataset.synthetic;
  if (cfg.seed == 0) cfg.seed = manifest.seeds.front();
  const SyntheticData data = generate_synthetic_drift(cfg);

  const std::filesystem::path dir(out);
  std::filesystem::create_directories(dir);
  write_csv(data.train, (dir / "train.csv").string());
  write_csv(data.test, (dir / "test.csv").string());
  std::string times = "sample_time\n";
  for (const double t : data.sample_time) times += detail::fmt(t) + "\n";
  detail::write_text(dir / "sample_time.csv", times);
  std::cout << "wrote " << data.train.n_samples() << " train rows, " << data.test.n_samples() << " test rows to "
            << dir.string() << "\n";
  return 0;
}

}  // namespace aoifl
