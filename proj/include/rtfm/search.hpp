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
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rtfm/common.hpp"
#include "rtfm/gap_estimator.hpp"
#include "rtfm/theta.hpp"

namespace rtfm {

struct Trial {
  int index = 0;
  ThetaParams theta;
  double gap = 0.0;
  // One entry per requested dataset; NaN (null on disk) marks a skipped one.
  std::vector<double> per_dataset_gaps;
  bool failed = false;
  std::string failure;          // error code when failed
  double elapsed_seconds = 0.0;  // wall time since search start; not persisted
};

struct TrialLog {
  std::vector<Trial> trials;

  std::size_t size() const noexcept { return trials.size(); }
  std::vector<const Trial*> surviving() const;
  // Highest gap among surviving trials; -inf when none survive.
  double max_gap() const;

  // One canonical JSON object per line:
  // {"failed":..,"gap":..,"per_dataset_gaps":[..],"theta":{..},"trial":i}
  std::string to_jsonl() const;
  static TrialLog from_jsonl(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static TrialLog load(const std::filesystem::path& path);
};

enum class StrategyKind { kTpe, kRandom };

struct SearchStrategy {
  StrategyKind kind = StrategyKind::kTpe;
  double gamma = 0.25;
  int n_candidates = 24;
  double prior_weight = 1.0;
  // Below this many trials TPE falls back to random proposals.
  int n_startup = 5;

  void validate() const;
  static SearchStrategy random() { return {StrategyKind::kRandom}; }
  static SearchStrategy tpe() { return {}; }
};

// Uniform draw over the discrete grid.
ThetaParams random_theta(Rng& rng);

// Factorized TPE over the discrete grid. Successful trials are split at the
// gamma-quantile of gap (higher = good); failed trials count as bad. Each
// dimension gets add-prior_weight smoothed frequency models l (good) and
// g (bad); n_candidates points are drawn from l and the one maximizing
// prod_d l_d / g_d is returned.
ThetaParams suggest(const TrialLog& history, const SearchStrategy& strategy, Rng& rng);

struct TrialOutcome {
  double gap = 0.0;
  std::vector<double> per_dataset_gaps;
  bool failed = false;
  std::string failure;
};

using TrialObjective = std::function<TrialOutcome(const ThetaParams& theta, std::uint64_t trial_seed)>;

// Sequential ask/tell loop over an arbitrary objective.
TrialLog run_search(const TrialObjective& objective, int n_trials, const SearchStrategy& strategy,
                    std::uint64_t seed);

// The search with estimate_gap as the objective. The model is only read.
// A trial needs at least max(1, n_ds / 2) usable datasets; errors raised by the
// model mark the trial failed with the error code.
TrialLog parameter_search(const Predictor& model, std::span<const LearnerKind> baselines,
                          int n_trials, const GapConfig& config, const SearchStrategy& strategy,
                          std::uint64_t seed);

}  // namespace rtfm
