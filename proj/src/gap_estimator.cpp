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

#include "rtfm/gap_estimator.hpp"

#include <algorithm>
#include <limits>
#include <optional>

namespace rtfm {

std::vector<double> GapEstimate::per_dataset_gaps() const {
  std::vector<double> out(model_losses.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = model_losses[i] - best_baseline_losses[i];
  return out;
}

std::uint64_t dataset_seed(std::uint64_t trial_seed, int j) {
  return derive_seed(trial_seed, "dataset", static_cast<std::uint64_t>(j));
}

GapEstimate estimate_gap(const Predictor& model, std::span<const LearnerKind> baselines,
                         const ThetaParams& theta, const GapConfig& config,
                         std::uint64_t trial_seed) {
  if (config.n_ds < 1) throw InvalidArgument("estimate_gap: n_ds must be >= 1");
  if (baselines.empty()) throw InvalidArgument("estimate_gap: no baselines");
  theta.validate();

  const auto n_ds = static_cast<std::size_t>(config.n_ds);
  std::vector<std::optional<TabularDataset>> datasets(n_ds);
  parallel_for(n_ds, config.workers, [&](std::size_t j) {
    try {
      datasets[j] = generate_dataset(theta, dataset_seed(trial_seed, static_cast<int>(j)),
                                     config.n_train, config.n_test);
    } catch (const Error&) {
      // Degenerate or infeasible generator draw: the dataset is skipped.
    }
  });

  GapEstimate est;
  est.theta = theta;
  std::vector<const TabularDataset*> ok;
  for (std::size_t j = 0; j < n_ds; ++j)
    if (datasets[j]) {
      ok.push_back(&*datasets[j]);
      est.dataset_indices.push_back(static_cast<int>(j));
    }
  if (ok.empty())
    throw Error("theta-unusable", "no dataset could be generated at this theta");

  // One job per (dataset, learner) pair plus one per dataset for the model.
  const std::size_t per = baselines.size() + 1;
  std::vector<double> losses(ok.size() * per, 0.0);
  parallel_for(losses.size(), config.workers, [&](std::size_t job) {
    const std::size_t d = job / per, k = job % per;
    const TabularDataset& ds = *ok[d];
    const std::vector<int> labels = ds.test_labels();
    if (k == 0) {
      losses[job] = cross_entropy(model.predict(ds), labels);
    } else {
      const std::uint64_t seed = derive_seed(ds.provenance->seed, "learner", k - 1);
      losses[job] = cross_entropy(fit_predict(baselines[k - 1], ds, seed), labels);
    }
  });

  double total = 0.0;
  for (std::size_t d = 0; d < ok.size(); ++d) {
    const double model_loss = losses[d * per];
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> row;
    for (std::size_t k = 1; k < per; ++k) {
      row.push_back(losses[d * per + k]);
      best = std::min(best, losses[d * per + k]);
    }
    est.model_losses.push_back(model_loss);
    est.best_baseline_losses.push_back(best);
    est.baseline_losses.push_back(std::move(row));
    total += model_loss - best;
  }
  est.n_effective = static_cast<int>(ok.size());
  est.gap = total / static_cast<double>(ok.size());
  return est;
}

}  // namespace rtfm
