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

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "rtfm/learners.hpp"

namespace rtfm {

// Binary ROC AUC as the normalized Mann-Whitney U; ties count one half.
// labels are 0/1. Throws Error("undefined-metric") with a single class.
double auc(std::span<const double> scores, std::span<const int> labels);

// Unweighted mean of pairwise AUCs over unordered class pairs (a, b), each on
// the rows of those two classes scored by p(b) / (p(a) + p(b)).
double auc_ovo(const ClassProbMatrix& probs, std::span<const int> labels);

// datasets x models score matrix.
struct ScoreTable {
  std::vector<std::string> datasets;
  std::vector<std::string> models;
  Eigen::MatrixXd scores;

  void validate() const;
  int model_index(const std::string& name) const;
  // Header "dataset,<model>,..."; one row per dataset.
  static ScoreTable from_csv(const std::string& text);
  static ScoreTable load(const std::filesystem::path& path);
  std::string to_csv() const;
};

// Per-row min-max scaling; constant rows map to 0.5 and are counted in
// *constant_rows when given.
ScoreTable normalize_per_dataset(const ScoreTable& table, int* constant_rows = nullptr);
std::vector<double> column_means(const ScoreTable& table);

// Average rank per model (1 = best score, ties share the mean rank).
std::vector<double> mean_rank(const ScoreTable& table);
// Datasets where the model strictly beats every other model.
std::vector<int> rank1_wins(const ScoreTable& table);

struct FriedmanResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};
// Tie-corrected Friedman chi-square over datasets (blocks) x models.
FriedmanResult friedman_test(const ScoreTable& table);

struct WilcoxonResult {
  double w_plus = 0.0;
  int n = 0;  // non-zero differences
  bool exact = true;
  double p_value = 1.0;
};
// Two-sided signed-rank test on a - b. Zero differences are dropped; exact
// null distribution for n <= kWilcoxonExactMax, normal approximation with
// continuity and tie correction above.
inline constexpr int kWilcoxonExactMax = 25;
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

// Exact two-sided p-value for W+ given (possibly tied) ranks, by dynamic
// programming over the 2^n sign assignments.
double wilcoxon_exact_p(std::span<const double> ranks, double w_plus);

// Summary with mean rank, mean normalized score, rank-1 wins, Friedman p and
// Wilcoxon p of `reference` against every other model.
nlohmann::json report_summary(const ScoreTable& table, const std::string& reference);

// Average ranks (1-based) of values in ascending order.
std::vector<double> average_ranks(std::span<const double> values);

}  // namespace rtfm
