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

#include "rtfm/theta.hpp"

#include <algorithm>
#include <cmath>

#include "rtfm/common.hpp"

namespace rtfm {

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kElu: return "elu";
    case Activation::kIdentity: return "identity";
    case Activation::kTanh: return "tanh";
  }
  return "relu";
}

std::string_view to_string(InputDistribution d) noexcept {
  switch (d) {
    case InputDistribution::kExponential: return "exponential";
    case InputDistribution::kUniform: return "uniform";
    case InputDistribution::kNormal: return "normal";
  }
  return "normal";
}

Activation parse_activation(std::string_view s) {
  for (auto a : kActivations)
    if (to_string(a) == s) return a;
  throw InvalidArgument("unknown activation '" + std::string(s) + "'");
}

InputDistribution parse_input_distribution(std::string_view s) {
  for (auto d : kInputDistributions)
    if (to_string(d) == s) return d;
  throw InvalidArgument("unknown input distribution '" + std::string(s) + "'");
}

namespace {

template <typename Container>
int position_of(const Container& c, int value, std::string_view field) {
  const auto it = std::find(c.begin(), c.end(), value);
  if (it == c.end())
    throw InvalidArgument(std::string(field) + " = " + std::to_string(value) +
                          " is not in its discrete support");
  return static_cast<int>(it - c.begin());
}

void check_tenths(int v, std::string_view field) {
  if (v < 0 || v > 10)
    throw InvalidArgument(std::string(field) + " must lie in {0.0, 0.1, ..., 1.0}");
}

int ratio_from_json(const nlohmann::json& j, std::string_view field) {
  const double v = j.at(std::string(field)).get<double>();
  const double scaled = v * 10.0;
  const double r = std::round(scaled);
  if (!std::isfinite(v) || std::abs(scaled - r) > 1e-6)
    throw InvalidArgument(std::string(field) + " must be a multiple of 0.1");
  check_tenths(static_cast<int>(r), field);
  return static_cast<int>(r);
}

}  // namespace

void ThetaParams::validate() const {
  if (mlp_size_index < 0 || mlp_size_index >= static_cast<int>(kMlpSizes.size()))
    throw InvalidArgument("mlp_size_index must lie in [0,4]");
  position_of(kNumFeaturesGrid, mu_num_features, "mu_num_features");
  position_of(kNumClassesGrid, mu_num_classes, "mu_num_classes");
  check_tenths(cat_ratio_tenths, "mu_cat_ratio");
  check_tenths(ordered_cat_ratio_tenths, "mu_ordered_cat_ratio");
  check_tenths(missing_ratio_tenths, "mu_missing_ratio");
}

ThetaIndices to_indices(const ThetaParams& t) {
  t.validate();
  return {t.mlp_size_index,
          position_of(kNumFeaturesGrid, t.mu_num_features, "mu_num_features"),
          position_of(kNumClassesGrid, t.mu_num_classes, "mu_num_classes"),
          t.cat_ratio_tenths,
          t.ordered_cat_ratio_tenths,
          t.missing_ratio_tenths,
          static_cast<int>(t.activation),
          static_cast<int>(t.input_distribution)};
}

ThetaParams from_indices(const ThetaIndices& idx) {
  for (std::size_t d = 0; d < kThetaDims; ++d)
    if (idx[d] < 0 || idx[d] >= kThetaDimSizes[d])
      throw InvalidArgument("theta index out of range for " + std::string(kThetaDimNames[d]));
  ThetaParams t;
  t.mlp_size_index = idx[0];
  t.mu_num_features = kNumFeaturesGrid[static_cast<std::size_t>(idx[1])];
  t.mu_num_classes = kNumClassesGrid[static_cast<std::size_t>(idx[2])];
  t.cat_ratio_tenths = idx[3];
  t.ordered_cat_ratio_tenths = idx[4];
  t.missing_ratio_tenths = idx[5];
  t.activation = kActivations[static_cast<std::size_t>(idx[6])];
  t.input_distribution = kInputDistributions[static_cast<std::size_t>(idx[7])];
  return t;
}

std::uint64_t theta_grid_size() noexcept {
  std::uint64_t n = 1;
  for (int s : kThetaDimSizes) n *= static_cast<std::uint64_t>(s);
  return n;
}

nlohmann::json to_json(const ThetaParams& t) {
  return nlohmann::json{
      {"mlp_size_index", t.mlp_size_index},
      {"mu_num_features", t.mu_num_features},
      {"mu_num_classes", t.mu_num_classes},
      {"mu_cat_ratio", t.mu_cat_ratio()},
      {"mu_ordered_cat_ratio", t.mu_ordered_cat_ratio()},
      {"mu_missing_ratio", t.mu_missing_ratio()},
      {"activation", std::string(to_string(t.activation))},
      {"input_distribution", std::string(to_string(t.input_distribution))},
  };
}

ThetaParams theta_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("theta must be a JSON object");
  ThetaParams t;
  try {
    t.mlp_size_index = j.at("mlp_size_index").get<int>();
    t.mu_num_features = j.at("mu_num_features").get<int>();
    t.mu_num_classes = j.at("mu_num_classes").get<int>();
    t.cat_ratio_tenths = ratio_from_json(j, "mu_cat_ratio");
    t.ordered_cat_ratio_tenths = ratio_from_json(j, "mu_ordered_cat_ratio");
    t.missing_ratio_tenths = ratio_from_json(j, "mu_missing_ratio");
    t.activation = parse_activation(j.at("activation").get<std::string>());
    t.input_distribution = parse_input_distribution(j.at("input_distribution").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("theta: ") + e.what());
  }
  t.validate();
  return t;
}

}  // namespace rtfm
