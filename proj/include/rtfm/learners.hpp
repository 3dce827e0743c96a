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

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "rtfm/dataset.hpp"

namespace rtfm {

inline constexpr double kProbClip = 1e-7;

// Test-row class probabilities. Rows sum to one and every entry is at least
// kProbClip: raw rows are normalized, then mixed as clip + (1 - C*clip) * q.
class ClassProbMatrix {
 public:
  ClassProbMatrix() = default;
  // Throws InvalidArgument on negative or non-finite entries; an all-zero row
  // becomes uniform.
  static ClassProbMatrix from_raw(Eigen::MatrixXd raw);
  static ClassProbMatrix uniform(int rows, int classes);
  // Rows that already sum to one with every entry >= kProbClip are kept
  // verbatim; the rest go through from_raw.
  static ClassProbMatrix from_clipped(Eigen::MatrixXd probs);

  const Eigen::MatrixXd& probs() const noexcept { return probs_; }
  int rows() const noexcept { return static_cast<int>(probs_.rows()); }
  int classes() const noexcept { return static_cast<int>(probs_.cols()); }
  double operator()(int r, int c) const { return probs_(r, c); }

 private:
  Eigen::MatrixXd probs_;
};

// Mean natural-log cross entropy of `labels` under `probs`.
double cross_entropy(const ClassProbMatrix& probs, std::span<const int> labels);

// Train-statistics preprocessing shared by every learner and the toy model:
// numeric columns mean-imputed and standardized, categorical columns
// mode-imputed and kept as ordinal codes.
struct PreparedData {
  Eigen::MatrixXd train_x;
  Eigen::MatrixXd test_x;
  std::vector<int> train_y;
  std::vector<int> test_y;
  int n_classes = 2;
};
PreparedData prepare(const TabularDataset& ds);

class Predictor;

struct LogisticRegressionParams {
  int iterations = 500;
  double learning_rate = 0.1;
  double l2 = 1e-4;
};
struct RandomForestParams {
  int trees = 100;
  int max_depth = 12;
  int min_samples_split = 2;
};
struct BoostedStumpsParams {
  int rounds = 200;
  double learning_rate = 0.1;
  int depth = 2;
};
struct KnnParams {
  int k = 5;
};
struct MlpParams {
  int hidden = 64;
  int epochs = 300;
  double learning_rate = 1e-2;
};
struct FrozenExternal {
  std::shared_ptr<const Predictor> model;
  std::string name = "frozen_external";
};

using LearnerParams = std::variant<LogisticRegressionParams, RandomForestParams,
                                   BoostedStumpsParams, KnnParams, MlpParams, FrozenExternal>;

struct LearnerKind {
  LearnerParams params;

  // logistic_regression, random_forest, boosted_stumps, knn, mlp, or the
  // FrozenExternal name.
  std::string name() const;
  void validate() const;

  static LearnerKind logistic_regression(LogisticRegressionParams p = {}) { return {p}; }
  static LearnerKind random_forest(RandomForestParams p = {}) { return {p}; }
  static LearnerKind boosted_stumps(BoostedStumpsParams p = {}) { return {p}; }
  static LearnerKind knn(KnnParams p = {}) { return {p}; }
  static LearnerKind mlp(MlpParams p = {}) { return {p}; }
  static LearnerKind frozen(std::shared_ptr<const Predictor> model, std::string name);
  // Built-in learners by name; aliases "logreg" and "rf" accepted.
  static LearnerKind from_name(const std::string& name);
};

// The default baseline family set.
std::vector<LearnerKind> default_baselines();
std::vector<LearnerKind> parse_baselines(const std::string& comma_separated);

// Fits on the train split only and returns test-row probabilities.
// Deterministic in (kind, data, seed).
ClassProbMatrix fit_predict(const LearnerKind& kind, const TabularDataset& data,
                            std::uint64_t seed);

}  // namespace rtfm
