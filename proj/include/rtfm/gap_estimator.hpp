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
#include <span>
#include <vector>

#include "rtfm/learners.hpp"
#include "rtfm/predictor.hpp"
#include "rtfm/scm_generator.hpp"

namespace rtfm {

struct GapConfig {
  int n_ds = 20;
  int n_train = kDefaultTrainRows;
  int n_test = kDefaultTestRows;
  std::size_t workers = 1;
};

// Monte Carlo lower bound on the optimality gap at one generator point:
// mean over datasets of (model test CE - best baseline test CE).
struct GapEstimate {
  ThetaParams theta;
  double gap = 0.0;
  std::vector<double> model_losses;
  std::vector<double> best_baseline_losses;
  // [dataset][learner] test cross entropies, for inspection.
  std::vector<std::vector<double>> baseline_losses;
  // Indices (in [0, n_ds)) of the datasets that were generated successfully.
  std::vector<int> dataset_indices;
  int n_effective = 0;

  std::vector<double> per_dataset_gaps() const;
};

// Seed of dataset j for a trial seed; stable under any evaluation order.
std::uint64_t dataset_seed(std::uint64_t trial_seed, int j);

// Generator failures skip the dataset; Error("theta-unusable") when none
// survive. Errors raised by the model itself (e.g. bridge failures) propagate.
GapEstimate estimate_gap(const Predictor& model, std::span<const LearnerKind> baselines,
                         const ThetaParams& theta, const GapConfig& config,
                         std::uint64_t trial_seed);

}  // namespace rtfm
