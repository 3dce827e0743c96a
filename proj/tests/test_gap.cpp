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

#include "rtfm/gap_estimator.hpp"

using namespace rtfm;

namespace {

class UniformPredictor final : public Predictor {
 public:
  ClassProbMatrix predict(const TabularDataset& d) const override {
    return ClassProbMatrix::uniform(static_cast<int>(d.test_indices.size()), d.n_classes);
  }
  std::string describe() const override { return "uniform"; }
  std::string fingerprint() const override { return "uniform"; }
};

GapConfig small(int n_ds) {
  GapConfig c;
  c.n_ds = n_ds;
  c.n_train = 64;
  c.n_test = 32;
  return c;
}

ThetaParams four_class() {
  ThetaParams t;
  t.mu_num_classes = 4;
  t.mlp_size_index = 1;
  return t;
}

}  // namespace

TEST_CASE("a copy of the only baseline has zero gap") {
  const LearnerPredictor model(LearnerKind::knn(), 12345);
  const std::vector<LearnerKind> baselines{LearnerKind::knn()};
  const GapEstimate est = estimate_gap(model, baselines, four_class(), small(4), 9);
  CHECK(std::abs(est.gap) <= 1e-9);
  CHECK(est.n_effective == 4);
}

TEST_CASE("uniform predictor gap is log C minus the best baseline loss") {
  const UniformPredictor model;
  const std::vector<LearnerKind> baselines{LearnerKind::logistic_regression(), LearnerKind::random_forest()};
  const GapEstimate est = estimate_gap(model, baselines, four_class(), small(3), 4);
  REQUIRE(est.n_effective == 3);
  double expected = 0;
  for (int i = 0; i < 3; ++i) {
    const TabularDataset ds = generate_dataset(four_class(), dataset_seed(4, est.dataset_indices[i]), 64, 32);
    CHECK(est.model_losses[i] == doctest::Approx(std::log(double(ds.n_classes))).epsilon(1e-12));
    const double b = std::min(
        cross_entropy(fit_predict(baselines[0], ds, derive_seed(ds.provenance->seed, "learner", 0)), ds.test_labels()),
        cross_entropy(fit_predict(baselines[1], ds, derive_seed(ds.provenance->seed, "learner", 1)), ds.test_labels()));
    CHECK(est.best_baseline_losses[i] == b);
    expected += std::log(double(ds.n_classes)) - b;
  }
  CHECK(est.gap == doctest::Approx(expected / 3).epsilon(1e-12));
  CHECK(est.gap > 0.0);
}

TEST_CASE("adding baselines can only raise the gap") {
  const UniformPredictor model;
  const std::vector<LearnerKind> one{LearnerKind::logistic_regression()};
  const std::vector<LearnerKind> two{LearnerKind::logistic_regression(), LearnerKind::knn()};
  for (std::uint64_t s = 0; s < 4; ++s) {
    const double a = estimate_gap(model, one, four_class(), small(2), s).gap;
    const double b = estimate_gap(model, two, four_class(), small(2), s).gap;
    CHECK(b >= a - 1e-12);
  }
}

TEST_CASE("gap estimates are independent of the worker count") {
  const UniformPredictor model;
  const auto baselines = default_baselines();
  GapConfig c1 = small(3), c3 = small(3);
  c3.workers = 3;
  const GapEstimate a = estimate_gap(model, baselines, four_class(), c1, 21);
  const GapEstimate b = estimate_gap(model, baselines, four_class(), c3, 21);
  CHECK(a.gap == b.gap);
  CHECK(a.baseline_losses == b.baseline_losses);
}

TEST_CASE("single dataset and seeds") {
  const UniformPredictor model;
  const std::vector<LearnerKind> baselines{LearnerKind::knn()};
  const GapEstimate est = estimate_gap(model, baselines, four_class(), small(1), 2);
  CHECK(est.n_effective == 1);
  CHECK(est.per_dataset_gaps().size() == 1);
  CHECK(dataset_seed(2, 0) == derive_seed(2, "dataset", 0));
  CHECK(dataset_seed(2, 0) != dataset_seed(2, 1));
}

TEST_CASE("unusable theta and bad arguments") {
  const UniformPredictor model;
  const std::vector<LearnerKind> baselines{LearnerKind::knn()};
  ThetaParams t;
  t.mlp_size_index = 0;
  t.mu_num_features = 200;
  try {
    estimate_gap(model, baselines, t, small(2), 0);
    FAIL("expected theta-unusable");
  } catch (const Error& e) {
    CHECK(e.code() == "theta-unusable");
  }
  CHECK_THROWS_AS(estimate_gap(model, baselines, four_class(), small(0), 0), InvalidArgument);
  CHECK_THROWS_AS(estimate_gap(model, {}, four_class(), small(1), 0), InvalidArgument);
}
