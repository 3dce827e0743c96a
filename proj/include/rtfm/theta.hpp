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

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

namespace rtfm {

enum class Activation { kRelu, kElu, kIdentity, kTanh };
enum class InputDistribution { kExponential, kUniform, kNormal };

inline constexpr std::array<Activation, 4> kActivations{
    Activation::kRelu, Activation::kElu, Activation::kIdentity, Activation::kTanh};
inline constexpr std::array<InputDistribution, 3> kInputDistributions{
    InputDistribution::kExponential, InputDistribution::kUniform, InputDistribution::kNormal};

std::string_view to_string(Activation a) noexcept;
std::string_view to_string(InputDistribution d) noexcept;
Activation parse_activation(std::string_view s);
InputDistribution parse_input_distribution(std::string_view s);

// Coupled (mean hidden size, mean layers, mean inputs) presets searched over.
struct MlpSize {
  int hidden;
  int layers;
  int inputs;
};
inline constexpr std::array<MlpSize, 5> kMlpSizes{{
    {5, 3, 2}, {10, 5, 3}, {32, 8, 3}, {64, 10, 8}, {128, 12, 13}}};
inline constexpr std::array<int, 6> kNumFeaturesGrid{2, 25, 50, 100, 150, 200};
inline constexpr std::array<int, 5> kNumClassesGrid{2, 4, 6, 8, 10};
// Ratios live on {0.0, 0.1, ..., 1.0}; stored as integer tenths.
inline constexpr int kRatioSteps = 11;

// A point of the discrete generator-parameter space. Ratios are kept as
// integer tenths so that equality and hashing are exact.
struct ThetaParams {
  int mlp_size_index = 0;
  int mu_num_features = 25;
  int mu_num_classes = 2;
  int cat_ratio_tenths = 0;
  int ordered_cat_ratio_tenths = 0;
  int missing_ratio_tenths = 0;
  Activation activation = Activation::kRelu;
  InputDistribution input_distribution = InputDistribution::kNormal;

  MlpSize mlp_size() const { return kMlpSizes.at(static_cast<std::size_t>(mlp_size_index)); }
  double mu_cat_ratio() const noexcept { return cat_ratio_tenths / 10.0; }
  double mu_ordered_cat_ratio() const noexcept { return ordered_cat_ratio_tenths / 10.0; }
  double mu_missing_ratio() const noexcept { return missing_ratio_tenths / 10.0; }

  // Throws InvalidArgument when a field leaves its declared support.
  void validate() const;

  friend bool operator==(const ThetaParams&, const ThetaParams&) = default;
};

// Index view used by the black-box search: each dimension is a categorical
// support of kThetaDimSizes[d] values.
inline constexpr std::size_t kThetaDims = 8;
inline constexpr std::array<int, kThetaDims> kThetaDimSizes{
    5, 6, 5, kRatioSteps, kRatioSteps, kRatioSteps, 4, 3};
inline constexpr std::array<std::string_view, kThetaDims> kThetaDimNames{
    "mlp_size_index",   "mu_num_features",  "mu_num_classes",
    "mu_cat_ratio",     "mu_ordered_cat_ratio", "mu_missing_ratio",
    "activation",       "input_distribution"};
using ThetaIndices = std::array<int, kThetaDims>;

ThetaIndices to_indices(const ThetaParams& theta);
ThetaParams from_indices(const ThetaIndices& idx);
// Total number of grid points.
std::uint64_t theta_grid_size() noexcept;

nlohmann::json to_json(const ThetaParams& theta);
ThetaParams theta_from_json(const nlohmann::json& j);

}  // namespace rtfm
