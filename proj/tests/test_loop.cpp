// Copyright 2026 The rtfm Authors
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

#include <doctest.h>

#include <cmath>
#include <map>

#include "rtfm/loop.hpp"
#include "rtfm/store.hpp"
#include "rtfm/toy_model.hpp"
#include "support.hpp"

using namespace rtfm;

namespace {

LoopConfig tiny() {
  LoopConfig c;
  c.n_epochs = 2;
  c.n_iter = 3;
  c.batch_size = 4;
  c.n_trials = 6;
  c.n_ds = 2;
  c.n_train = 48;
  c.n_test = 24;
  c.add_original_baseline_after_epoch = 1;
  c.baselines = {"logistic_regression", "knn"};
  c.seed = 5;
  return c;
}

// A knn wrapper that never changes: every gap against a knn baseline is zero.
class FixedKnn final : public TrainablePredictor {
 public:
  ClassProbMatrix predict(const TabularDataset& d) const override { return fit_predict(LearnerKind::knn(), d, 0); }
  std::string describe() const override { return "fixed-knn"; }
  std::string fingerprint() const override { return "fixed-knn"; }
  double train_step(std::span<const TabularDataset>, double) override { return 0.0; }
  std::shared_ptr<const Predictor> freeze() const override { return std::make_shared<FixedKnn>(); }
  nlohmann::json save() const override { return nlohmann::json::object(); }
  void restore(const nlohmann::json&) override {}
};

}  // namespace

TEST_CASE("config json round trip and validation") {
  LoopConfig c = tiny();
  c.lr = 0.2;
  const LoopConfig back = LoopConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(LoopConfig::from_json({{"n_trials", 7}}).n_trials == 7);
  CHECK_THROWS_WITH(LoopConfig::from_json({{"x", 1}}), "config: unknown field 'x'");
  CHECK_THROWS_AS(LoopConfig::from_json({{"n_trials", "7"}}), InvalidArgument);
  LoopConfig bad = tiny();
  bad.c_frac = 1.0;
  CHECK_THROWS_WITH(bad.validate(), doctest::Contains("c_frac"));
  bad = tiny();
  bad.baselines = {"svm"};
  CHECK_THROWS_WITH(bad.validate(), doctest::Contains("baselines"));
  CHECK(LoopConfig().resolved_lr(true) == kToyLearningRate);
  CHECK(LoopConfig().resolved_lr(false) == kBridgeLearningRate);
}

TEST_CASE("zero epochs does nothing") {
  LoopConfig c = tiny();
  c.n_epochs = 0;
  ToyModel model;
  const LoopResult r = run_rtfm(c, model);
  CHECK(r.reports.empty());
  CHECK(model.step() == 0);
}

TEST_CASE("theta sampling follows the weights") {
  ThetaParams a, b;
  b.activation = Activation::kTanh;
  DroWeights point = build_dro_weights({a}, {0.3}, 0.5);
  Rng rng(1);
  for (auto i : sample_theta_indices(point, 100, rng)) CHECK(i == 0);

  const DroWeights even = build_dro_weights({a, b}, {0.1, 0.1}, 0.5);
  const auto idx = sample_theta_indices(even, 100000, rng);
  const double frac = std::count(idx.begin(), idx.end(), 1) / 1e5;
  CHECK(std::abs(frac - 0.5) <= 0.01);

  std::vector<ThetaParams> five(5);
  for (int i = 0; i < 5; ++i) five[static_cast<std::size_t>(i)].cat_ratio_tenths = i;
  const DroWeights q = build_dro_weights(five, {0.1, 0.5, 0.2, 0.9, 0.4}, 0.3);
  std::vector<double> counts(5, 0);
  const std::size_t n = 200000;
  for (auto i : sample_theta_indices(q, n, rng)) counts[i] += 1;
  double tv = 0;
  for (int i = 0; i < 5; ++i) tv += std::abs(counts[static_cast<std::size_t>(i)] / n - q.weights[static_cast<std::size_t>(i)]);
  CHECK(tv / 2 <= 0.01);
}

TEST_CASE("training batches have the configured size") {
  LoopConfig c = tiny();
  c.batch_size = 64;
  const DroWeights q = build_dro_weights({ThetaParams{}}, {0.0}, 0.5);
  Rng rng(2);
  const auto batch = sample_training_batch(q, c, rng);
  CHECK(batch.size() == 64);
  for (const auto& ds : batch) CHECK(ds.rows() == c.n_train + c.n_test);
}

TEST_CASE("weights from a log skip failed trials") {
  TrialLog log;
  for (int i = 0; i < 4; ++i) {
    Trial t;
    t.index = i;
    t.gap = 0.1 * i;
    t.failed = i == 2;
    log.trials.push_back(t);
  }
  const DroWeights q = weights_from_log(log, 0.5);
  CHECK(q.gaps.size() == 3);
  CHECK(q.h_min == doctest::Approx(0.5 * std::log(3.0)));
  for (auto& t : log.trials) t.failed = true;
  try {
    weights_from_log(log, 0.5);
    FAIL("expected no-surviving-trials");
  } catch (const Error& e) {
    CHECK(e.code() == "no-surviving-trials");
  }
}

TEST_CASE("run directory contents and q provenance") {
  const auto dir = testing::temp_dir("loop-run");
  ToyModel model;
  LoopOptions opts;
  opts.run_dir = dir;
  int callbacks = 0;
  opts.on_epoch = [&](const EpochReport&) { ++callbacks; };
  const LoopConfig c = tiny();
  const LoopResult r = run_rtfm(c, model, opts);
  CHECK(callbacks == 3);
  REQUIRE(r.reports.size() == 3);
  CHECK(model.step() == 2 * c.n_iter);
  CHECK_FALSE(r.reports[0].original_baseline);
  CHECK(r.reports[1].original_baseline);

  for (int e = 0; e <= 2; ++e) {
    const TrialLog log = TrialLog::load(dir / trial_log_name(e));
    CHECK(log.to_jsonl() == r.trial_logs[static_cast<std::size_t>(e)].to_jsonl());
    // Q rebuilt from the persisted log reproduces the report.
    const DroWeights q = weights_from_log(log, c.c_frac);
    const EpochReport& rep = r.reports[static_cast<std::size_t>(e)];
    CHECK(std::abs(q.weighted_objective() - rep.weighted_objective) <= 1e-9);
    CHECK(q.entropy >= c.c_frac * std::log(double(rep.n_surviving)) - 1e-6);
    CHECK(rep.n_surviving == static_cast<int>(log.surviving().size()));
    CHECK(std::filesystem::exists(dir / snapshot_name(e)));
  }
  const auto reports = load_reports(dir);
  CHECK(reports.size() == 3);
  CHECK(reports[2].max_gap == r.reports[2].max_gap);
  const RunManifest m = RunManifest::from_json(read_json_file(dir / kManifestName));
  CHECK(m.files.count(trial_log_name(2)) == 1);
  CHECK(m.derived_seeds.count("search/2") == 1);
  CHECK(m.derived_seeds.count("train/1") == 1);
  CHECK(read_json_file(dir / kStateFile).at("completed_epoch") == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("resume reproduces an uninterrupted run") {
  const auto full = testing::temp_dir("loop-full");
  const auto part = testing::temp_dir("loop-part");
  LoopConfig c = tiny();
  {
    ToyModel model;
    LoopOptions o;
    o.run_dir = full;
    run_rtfm(c, model, o);
  }
  {
    LoopConfig first = c;
    first.n_epochs = 1;
    ToyModel model;
    LoopOptions o;
    o.run_dir = part;
    run_rtfm(first, model, o);
  }
  {
    ToyModel model;
    LoopOptions o;
    o.run_dir = part;
    o.resume = true;
    const LoopResult r = run_rtfm(c, model, o);
    CHECK(r.reports.size() == 3);
  }
  CHECK(read_text_file(part / trial_log_name(2)) == read_text_file(full / trial_log_name(2)));
  CHECK(read_text_file(part / snapshot_name(2)) == read_text_file(full / snapshot_name(2)));
  std::filesystem::remove_all(full);
  std::filesystem::remove_all(part);
  LoopOptions no_dir;
  no_dir.resume = true;
  ToyModel model;
  CHECK_THROWS_AS(run_rtfm(c, model, no_dir), InvalidArgument);
}

TEST_CASE("a model equal to its baseline is a fixed point") {
  LoopConfig c = tiny();
  c.baselines = {"knn"};
  FixedKnn model;
  const LoopResult r = run_rtfm(c, model);
  for (const auto& rep : r.reports) {
    CHECK(std::abs(rep.max_gap) <= 1e-9);
    CHECK(std::abs(rep.weighted_objective) <= 1e-9);
    CHECK(rep.eta == 0.0);
    CHECK(rep.entropy == doctest::Approx(std::log(double(rep.n_surviving))));
  }
}

TEST_CASE("epoch report json round trip") {
  EpochReport r;
  r.epoch = 3;
  r.max_gap = 0.25;
  r.n_surviving = 9;
  r.original_baseline = true;
  CHECK(EpochReport::from_json(r.to_json()).to_json() == r.to_json());
}
