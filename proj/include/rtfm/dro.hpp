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

// Entropy-constrained adversarial weighting over evaluated generator points.
//
// Maximizing sum_i q_i * gap_i over the simplex subject to H(q) >= h_min is
// solved by q_i proportional to exp(eta * gap_i). For non-constant gaps the
// entropy of that softmax falls strictly as eta grows (equivalently, rises in
// the temperature lambda = 1 / eta), so the binding eta is found by bisection.

#include <span>
#include <vector>

#include "rtfm/theta.hpp"

namespace rtfm {

inline constexpr double kDefaultEntropyTol = 1e-9;
inline constexpr double kMaxEta = 1e6;

// q_i = exp(eta * gap_i - max_j eta * gap_j) / sum.
std::vector<double> softmax_weights(std::span<const double> gaps, double eta);

// -sum q_i log q_i with 0 log 0 = 0.
double entropy(std::span<const double> q);

struct EtaSolution {
  double eta = 0.0;
  // False when the bracket hit kMaxEta before the entropy dropped to h_min
  // (gaps nearly tied at the top); eta is then kMaxEta.
  bool converged = true;
};

// eta >= 0 with |H(softmax_weights(gaps, eta)) - h_min| <= tol.
EtaSolution solve_eta_detailed(std::span<const double> gaps, double h_min,
                               double tol = kDefaultEntropyTol, double initial_upper = 1.0);
double solve_eta(std::span<const double> gaps, double h_min, double tol = kDefaultEntropyTol);

struct DroWeights {
  std::vector<ThetaParams> thetas;
  std::vector<double> gaps;
  double eta = 0.0;
  std::vector<double> weights;
  double entropy = 0.0;
  double h_min = 0.0;
  double c_frac = 0.5;

  // sum_i q_i * gap_i
  double weighted_objective() const;
};

// H_min = c_frac * log(n). A single point gets weight 1 and eta 0.
DroWeights build_dro_weights(std::vector<ThetaParams> thetas, std::vector<double> gaps,
                             double c_frac, double tol = kDefaultEntropyTol);

}  // namespace rtfm
