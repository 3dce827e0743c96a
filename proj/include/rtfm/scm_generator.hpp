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

// Synthetic classification data from randomly initialized MLPs.
//
// A generator parameter point (ThetaParams) fixes the means of the
// per-dataset hyperparameter distributions. Each draw then
//   1. samples concrete hyperparameters (truncated normals rounded to
//      integers where needed, epsilon-greedy for categorical choices),
//   2. builds an MLP with Normal(0, 1/sqrt(fan_in)) weights and picks which
//      hidden units become features and which unit becomes the target,
//   3. pushes standardized inputs through the MLP, bins the target unit into
//      equal-mass classes, discretizes the categorical columns and masks
//      train cells completely at random.

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "rtfm/common.hpp"
#include "rtfm/dataset.hpp"
#include "rtfm/theta.hpp"

namespace rtfm {

inline constexpr double kEpsilonGreedy = 0.3;
inline constexpr int kMaxScmRebuilds = 10;
inline constexpr int kMaxSplitResamples = 20;
inline constexpr int kDefaultTrainRows = 256;
inline constexpr int kDefaultTestRows = 128;

struct ScmHyperparams {
  int hidden_size = 5;
  int num_layers = 1;
  int num_inputs = 1;
  int num_features = 2;
  int num_classes = 2;
  double cat_ratio = 0.0;
  double ordered_cat_ratio = 0.0;
  double missing_ratio = 0.0;
  Activation activation = Activation::kRelu;
  InputDistribution input_distribution = InputDistribution::kNormal;

  void validate() const;
};

struct NodeIndex {
  int layer = 0;
  int unit = 0;
  friend auto operator<=>(const NodeIndex&, const NodeIndex&) = default;
};

struct CategoricalSpec {
  int num_bins = 2;
  bool ordered = true;
  // Present iff !ordered: code i is emitted as permutation[i].
  std::vector<int> permutation;
};

struct ScmInstance {
  ScmHyperparams hyperparams;
  // weights[0] is hidden x inputs, the rest hidden x hidden.
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  std::vector<NodeIndex> feature_nodes;
  NodeIndex target_node;
  // One entry per feature; nullopt = numeric.
  std::vector<std::optional<CategoricalSpec>> categorical;
  std::uint64_t seed = 0;
};

// Normal(mean, sd) conditioned on [lo, hi].
double truncated_normal(double mean, double sd, double lo, double hi, Rng& rng);

ScmHyperparams sample_hyperparams(const ThetaParams& theta, Rng& rng);

// Throws Error("infeasible-feature-count") when the MLP has fewer than
// num_features + 1 hidden units.
ScmInstance build_scm(const ScmHyperparams& hp, Rng& rng);

// sample_hyperparams + build_scm, resampling the hyperparameters on
// infeasible draws up to kMaxScmRebuilds times.
ScmInstance sample_scm(const ThetaParams& theta, Rng& rng);

// Forward pass; returns the activations of every hidden layer (rows = samples).
std::vector<Eigen::MatrixXd> propagate(const ScmInstance& scm, const Eigen::MatrixXd& inputs);

// Throws Error("degenerate-generator") when the target collapses to a single
// class after kMaxScmRebuilds weight redraws, Error("class-coverage") when no
// split within kMaxSplitResamples puts every observed class in train.
TabularDataset sample_dataset(const ScmInstance& scm, int n_train, int n_test, Rng& rng);

// Deterministic end-to-end draw: identical arguments give identical datasets.
TabularDataset generate_dataset(const ThetaParams& theta, std::uint64_t seed,
                                int n_train = kDefaultTrainRows, int n_test = kDefaultTestRows);

// Equal-mass binning: value -> number of bin thresholds strictly below it.
std::vector<int> quantile_bins(const Eigen::Ref<const Eigen::VectorXd>& values, int bins);

}  // namespace rtfm
