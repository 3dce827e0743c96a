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

// Alternating max-min training: parameter search finds generator points where
// the model trails the baselines, an entropy-constrained softmax turns their
// gaps into sampling weights, and the model is trained on datasets drawn from
// those weights.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rtfm/dro.hpp"
#include "rtfm/predictor.hpp"
#include "rtfm/search.hpp"

namespace rtfm {

inline constexpr double kToyLearningRate = 5e-2;
inline constexpr double kBridgeLearningRate = 1e-5;

struct LoopConfig {
  int n_epochs = 30;
  int n_iter = 3000;
  int batch_size = 64;
  // Unset: kToyLearningRate for the toy model, kBridgeLearningRate otherwise.
  std::optional<double> lr;
  int n_trials = 100;
  int n_ds = 20;
  double c_frac = 0.5;
  int n_train = kDefaultTrainRows;
  int n_test = kDefaultTestRows;
  int add_original_baseline_after_epoch = 5;
  std::uint64_t seed = 0;
  std::vector<std::string> baselines = {"logistic_regression", "random_forest", "boosted_stumps",
                                        "knn", "mlp"};
  std::string strategy = "tpe";
  std::size_t workers = 1;

  // Throws InvalidArgument naming the offending field.
  void validate() const;
  double resolved_lr(bool toy) const { return lr.value_or(toy ? kToyLearningRate : kBridgeLearningRate); }
  GapConfig gap_config() const { return {n_ds, n_train, n_test, workers}; }
  SearchStrategy search_strategy() const;

  // Field names mirror the struct; workers is not persisted.
  nlohmann::json to_json() const;
  // Missing fields keep their defaults; unknown fields are rejected.
  static LoopConfig from_json(const nlohmann::json& j);
};

struct EpochReport {
  // 0 is the initial search; e >= 1 follows the e-th training epoch.
  int epoch = 0;
  double max_gap = 0.0;
  // sum_i q_i * gap_i under this epoch's weights.
  double weighted_objective = 0.0;
  double eta = 0.0;
  double entropy = 0.0;
  double h_min = 0.0;
  int n_surviving = 0;
  bool original_baseline = false;
  // Mean batch loss over the epoch's training steps (0 for epoch 0).
  double mean_train_loss = 0.0;
  double wall_seconds = 0.0;

  nlohmann::json to_json() const;
  static EpochReport from_json(const nlohmann::json& j);
};

// n indices drawn i.i.d. from the weights.
std::vector<std::size_t> sample_theta_indices(const DroWeights& q, std::size_t n, Rng& rng);

inline constexpr int kMaxBatchRedraws = 1000;

// batch_size datasets, each from an independently drawn theta. A theta whose
// generator fails is redrawn from q up to kMaxBatchRedraws times before
// Error("degenerate-generator").
std::vector<TabularDataset> sample_training_batch(const DroWeights& q, const LoopConfig& config,
                                                  Rng& rng);

// Weights over a trial log's surviving trials (failed trials are excluded and
// H_min uses their count).
DroWeights weights_from_log(const TrialLog& log, double c_frac);

EpochReport summarize_epoch(int epoch, const TrialLog& log, const DroWeights& q);

struct LoopResult {
  std::vector<EpochReport> reports;
  std::vector<TrialLog> trial_logs;
};

struct LoopOptions {
  // Persist config, trial logs, reports, snapshots and manifest here.
  std::optional<std::filesystem::path> run_dir;
  // Continue a run directory from its last completed epoch.
  bool resume = false;
  bool toy = true;
  std::function<void(const EpochReport&)> on_epoch;
};

LoopResult run_rtfm(const LoopConfig& config, TrainablePredictor& model,
                    const LoopOptions& options = {});

// Run-dir file names.
std::string trial_log_name(int epoch);
std::string snapshot_name(int epoch);
inline constexpr const char* kEpochsFile = "epochs.jsonl";
inline constexpr const char* kConfigFile = "config.json";
inline constexpr const char* kStateFile = "state.json";

std::vector<EpochReport> load_reports(const std::filesystem::path& run_dir);

}  // namespace rtfm
