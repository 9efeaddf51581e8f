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

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "aoifl/model.hpp"
#include "aoifl/rng.hpp"

using namespace aoifl;

namespace {

SoftmaxModel tiny_model() {
  SoftmaxModel m;
  m.weights.resize(2, 2);
  m.weights << 0.3, -0.2, -0.1, 0.4;
  m.bias.resize(2);
  m.bias << 0.05, -0.05;
  return m;
}

Dataset one_sample_dataset() {
  Dataset ds;
  ds.features.resize(1, 2);
  ds.features << 1.5, -2.0;
  ds.labels = {0};
  return ds;
}

Dataset random_dataset(int n, int d, int c, RngStream& rng) {
  Dataset ds;
  ds.features.resize(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) ds.features(i, j) = rng.normal();
  ds.labels.resize(static_cast<std::size_t>(n));
  for (auto& y : ds.labels) y = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(c)));
  return ds;
}

ClientShard full_shard(int n) {
  ClientShard s;
  s.owner_client = 0;
  for (int i = 0; i < n; ++i) s.sample_indices.push_back(i);
  return s;
}

}  // namespace

TEST_CASE("init_model is zero with the documented parameter count") {
  const auto m = init_model(20, 5);
  REQUIRE(m.weights.isZero(0.0));
  REQUIRE(m.bias.isZero(0.0));
  REQUIRE(m.param_count() == 105);
  REQUIRE_THROWS_AS(init_model(0, 2), std::invalid_argument);
  REQUIRE_THROWS_AS(init_model(3, 1), std::invalid_argument);
}

TEST_CASE("predict_proba rows sum to one and match a hand computation") {
  const auto m = tiny_model();
  const auto ds = one_sample_dataset();
  const Eigen::MatrixXd p = predict_proba(m, ds.features);
  REQUIRE(std::abs(p.row(0).sum() - 1.0) < 1e-12);
  // logits = (0.9, -1.0); softmax values computed independently.
  REQUIRE(p(0, 0) == Catch::Approx(0.8698915256370021).margin(1e-15));
  REQUIRE(p(0, 1) == Catch::Approx(0.13010847436299786).margin(1e-15));
}

TEST_CASE("predict_proba is invariant to a constant shift of all logits") {
  RngStream rng(11);
  auto ds = random_dataset(16, 4, 3, rng);
  SoftmaxModel m = init_model(4, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) m.weights(i, j) = rng.normal();
  SoftmaxModel shifted = m;
  shifted.bias.array() += 123.456;
  const auto p1 = predict_proba(m, ds.features);
  const auto p2 = predict_proba(shifted, ds.features);
  REQUIRE((p1 - p2).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("predict_proba survives extreme logits") {
  SoftmaxModel m = init_model(1, 2);
  m.weights << 1000.0, 0.0;
  Eigen::MatrixXd X(1, 1);
  X << 1.0;
  const auto p = predict_proba(m, X);
  REQUIRE(p.allFinite());
  REQUIRE(p(0, 0) == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(p(0, 1) >= 0.0);
}

TEST_CASE("predict_proba validates its input") {
  const auto m = tiny_model();
  Eigen::MatrixXd wrong(1, 3);
  wrong.setZero();
  REQUIRE_THROWS_AS(predict_proba(m, wrong), std::invalid_argument);
  Eigen::MatrixXd inf(1, 2);
  inf << 1.0, std::numeric_limits<double>::infinity();
  REQUIRE_THROWS_AS(predict_proba(m, inf), std::invalid_argument);
}

TEST_CASE("cross_entropy matches the hand-computed value and clamps") {
  const auto m = tiny_model();
  const auto ds = one_sample_dataset();
  const double ce = cross_entropy(predict_proba(m, ds.features), ds.labels);
  REQUIRE(ce == Catch::Approx(0.13938675828296063).margin(1e-15));

  Eigen::MatrixXd p(1, 2);
  p << 1.0, 0.0;
  REQUIRE(std::isfinite(cross_entropy(p, {1})));
  REQUIRE_THROWS_AS(cross_entropy(p, {}), std::invalid_argument);
}

TEST_CASE("one SGD step on one sample reproduces the closed-form update") {
  const auto global = tiny_model();
  const auto ds = one_sample_dataset();
  ClientShard shard = full_shard(1);
  RngStream rng(1);
  const TrainReport r = local_train(global, ds, shard, nullptr, 1, 1, 0.2, rng);

  REQUIRE(r.sample_count == 1);
  REQUIRE(r.initial_loss == Catch::Approx(0.13938675828296063).margin(1e-15));
  Eigen::MatrixXd w_expect(2, 2);
  w_expect << 0.33903254230889934, -0.2520433897451992, -0.13903254230889936, 0.4520433897451992;
  Eigen::VectorXd b_expect(2);
  b_expect << 0.07602169487259958, -0.07602169487259958;
  REQUIRE((r.updated_model.weights - w_expect).cwiseAbs().maxCoeff() < 1e-15);
  REQUIRE((r.updated_model.bias - b_expect).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("local_train leaves the global model untouched and replays by seed") {
  RngStream data_rng(12);
  const auto ds = random_dataset(64, 5, 3, data_rng);
  const auto shard = full_shard(64);
  SoftmaxModel global = init_model(5, 3);
  const Eigen::MatrixXd w_before = global.weights;

  RngStream r1(77), r2(77), r3(78);
  const auto a = local_train(global, ds, shard, nullptr, 10, 16, 0.1, r1);
  const auto b = local_train(global, ds, shard, nullptr, 10, 16, 0.1, r2);
  const auto c = local_train(global, ds, shard, nullptr, 10, 16, 0.1, r3);
  REQUIRE((global.weights - w_before).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((a.updated_model.weights - b.updated_model.weights).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((a.updated_model.bias - b.updated_model.bias).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((a.updated_model.weights - c.updated_model.weights).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("steps = 0 reports the initial loss without changing the model") {
  RngStream data_rng(13);
  const auto ds = random_dataset(32, 4, 2, data_rng);
  const auto shard = full_shard(32);
  const SoftmaxModel global = init_model(4, 2);
  RngStream rng(5);
  const auto r = local_train(global, ds, shard, nullptr, 0, 8, 0.5, rng);
  REQUIRE((r.updated_model.weights - global.weights).cwiseAbs().maxCoeff() == 0.0);
  // Zero model: every class equally likely, loss = log(n_classes).
  REQUIRE(r.initial_loss == Catch::Approx(std::log(2.0)).margin(1e-12));
}

TEST_CASE("training on separable data reduces loss") {
  Dataset ds;
  const int n = 200;
  ds.features.resize(n, 2);
  ds.labels.resize(n);
  RngStream gen(14);
  for (int i = 0; i < n; ++i) {
    const int y = i % 2;
    ds.features(i, 0) = (y == 0 ? -2.0 : 2.0) + 0.3 * gen.normal();
    ds.features(i, 1) = gen.normal();
    ds.labels[static_cast<std::size_t>(i)] = y;
  }
  const auto shard = full_shard(n);
  const SoftmaxModel global = init_model(2, 2);
  RngStream rng(15);
  const auto r = local_train(global, ds, shard, nullptr, 50, 32, 0.5, rng);
  const double final_loss = cross_entropy(predict_proba(r.updated_model, ds.features), ds.labels);
  REQUIRE(r.initial_loss == Catch::Approx(std::log(2.0)).margin(1e-12));
  REQUIRE(final_loss < 0.1);
}

TEST_CASE("small shards fall back to sampling with replacement") {
  RngStream data_rng(16);
  const auto ds = random_dataset(4, 3, 2, data_rng);
  const auto shard = full_shard(4);
  RngStream rng(17);
  // batch_size 8 > shard size 4 still trains.
  const auto r = local_train(init_model(3, 2), ds, shard, nullptr, 5, 8, 0.1, rng);
  REQUIRE(r.updated_model.weights.allFinite());
  REQUIRE(r.sample_count == 4);
}

TEST_CASE("label overlay redirects gradients without touching the dataset") {
  RngStream data_rng(18);
  auto ds = random_dataset(32, 4, 3, data_rng);
  const auto labels_before = ds.labels;
  const auto shard = full_shard(32);
  PoisonOverlay overlay;
  for (int i = 0; i < 32; ++i)
    if (ds.labels[static_cast<std::size_t>(i)] != 1) overlay[i] = 1;

  RngStream r1(19), r2(19);
  const auto clean = local_train(init_model(4, 3), ds, shard, nullptr, 10, 16, 0.2, r1);
  const auto poisoned = local_train(init_model(4, 3), ds, shard, &overlay, 10, 16, 0.2, r2);
  REQUIRE(ds.labels == labels_before);
  REQUIRE((clean.updated_model.weights - poisoned.updated_model.weights).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("analytic gradient matches central finite differences") {
  RngStream rng(20260819);
  double max_rel_err = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 2 + static_cast<int>(rng.uniform_int(4));
    const int c = 2 + static_cast<int>(rng.uniform_int(3));
    const int n = 3 + static_cast<int>(rng.uniform_int(6));
    const auto ds = random_dataset(n, d, c, rng);
    const auto shard = full_shard(n);

    SoftmaxModel m = init_model(d, c);
    for (int i = 0; i < c; ++i) {
      for (int j = 0; j < d; ++j) m.weights(i, j) = 0.5 * rng.normal();
      m.bias(i) = 0.5 * rng.normal();
    }

    // Full-batch step with lr = 1 makes the update equal the negative gradient.
    RngStream step_rng(1);
    const auto r = local_train(m, ds, shard, nullptr, 1, n, 1.0, step_rng);
    const Eigen::MatrixXd grad_w = m.weights - r.updated_model.weights;
    const Eigen::VectorXd grad_b = m.bias - r.updated_model.bias;

    const auto loss_at = [&](const SoftmaxModel& probe) {
      return cross_entropy(predict_proba(probe, ds.features), ds.labels);
    };
    const double eps = 1e-6;
    const double scale = std::max(1.0, grad_w.cwiseAbs().maxCoeff());
    for (int i = 0; i < c; ++i) {
      for (int j = 0; j < d; ++j) {
        SoftmaxModel up = m, down = m;
        up.weights(i, j) += eps;
        down.weights(i, j) -= eps;
        const double fd = (loss_at(up) - loss_at(down)) / (2 * eps);
        max_rel_err = std::max(max_rel_err, std::abs(fd - grad_w(i, j)) / scale);
      }
      SoftmaxModel up = m, down = m;
      up.bias(i) += eps;
      down.bias(i) -= eps;
      const double fd = (loss_at(up) - loss_at(down)) / (2 * eps);
      max_rel_err = std::max(max_rel_err, std::abs(fd - grad_b(i)) / scale);
    }
  }
  REQUIRE(max_rel_err < 1e-5);
}

TEST_CASE("model checkpoints round-trip bit for bit") {
  RngStream rng(21);
  SoftmaxModel m = init_model(7, 4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 7; ++j) m.weights(i, j) = rng.normal();
    m.bias(i) = rng.normal();
  }
  const auto path = (std::filesystem::temp_directory_path() / "aoifl_model_test.bin").string();
  save_model(m, path);
  const SoftmaxModel back = load_model(path);
  REQUIRE((back.weights - m.weights).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((back.bias - m.bias).cwiseAbs().maxCoeff() == 0.0);

  // Corrupt magic.
  {
    std::ofstream f(path, std::ios::binary);
    f << "garbage data garbage data";
  }
  REQUIRE_THROWS(load_model(path));
  std::remove(path.c_str());
  REQUIRE_THROWS(load_model(path));
}

TEST_CASE("local_train validates arguments") {
  RngStream data_rng(22);
  const auto ds = random_dataset(8, 3, 2, data_rng);
  RngStream rng(23);
  ClientShard empty;
  REQUIRE_THROWS_AS(local_train(init_model(3, 2), ds, empty, nullptr, 1, 4, 0.1, rng), std::invalid_argument);
  const auto shard = full_shard(8);
  REQUIRE_THROWS_AS(local_train(init_model(3, 2), ds, shard, nullptr, -1, 4, 0.1, rng), std::invalid_argument);
  REQUIRE_THROWS_AS(local_train(init_model(3, 2), ds, shard, nullptr, 1, 0, 0.1, rng), std::invalid_argument);
}
