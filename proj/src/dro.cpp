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

#include "rtfm/dro.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "rtfm/common.hpp"

namespace rtfm {

std::vector<double> softmax_weights(std::span<const double> gaps, double eta) {
  if (gaps.empty()) throw InvalidArgument("softmax_weights: empty gaps");
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw InvalidArgument("softmax_weights: eta must be >= 0");
  double top = -std::numeric_limits<double>::infinity();
  for (double g : gaps) {
    if (!std::isfinite(g)) throw InvalidArgument("softmax_weights: non-finite gap");
    top = std::max(top, eta * g);
  }
  std::vector<double> q(gaps.size());
  double z = 0.0;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    q[i] = std::exp(eta * gaps[i] - top);
    z += q[i];
  }
  for (double& v : q) v /= z;
  return q;
}

double entropy(std::span<const double> q) {
  double h = 0.0;
  for (double v : q)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

EtaSolution solve_eta_detailed(std::span<const double> gaps, double h_min, double tol,
                               double initial_upper) {
  if (gaps.empty()) throw InvalidArgument("solve_eta: empty gaps");
  for (double g : gaps)
    if (!std::isfinite(g)) throw InvalidArgument("solve_eta: non-finite gap");
  if (!(tol > 0.0)) throw InvalidArgument("solve_eta: tol must be positive");
  if (!(initial_upper > 0.0)) throw InvalidArgument("solve_eta: bracket must be positive");
  const double h_max = std::log(static_cast<double>(gaps.size()));
  if (!(h_min > 0.0)) throw InvalidArgument("solve_eta: h_min must be positive");
  if (h_min > h_max + 1e-12) throw InvalidArgument("solve_eta: h_min exceeds log(n)");

  const auto [lo_it, hi_it] = std::minmax_element(gaps.begin(), gaps.end());
  if (*lo_it == *hi_it) return {0.0, true};
  if (h_min >= h_max - tol) return {0.0, true};

  auto h_at = [&](double eta) { return entropy(softmax_weights(gaps, eta)); };
  double lo = 0.0, hi = initial_upper;
  while (h_at(hi) > h_min) {
    lo = hi;
    hi *= 2.0;
    if (hi > kMaxEta) {
      std::cerr << "warning: solve_eta bracket exceeded " << kMaxEta
                << "; gaps are nearly tied at the top\n";
      return {kMaxEta, false};
    }
  }
  // H is decreasing in eta: H(lo) > h_min >= H(hi).
  double mid = hi;
  for (int it = 0; it < 400; ++it) {
    mid = 0.5 * (lo + hi);
    const double h = h_at(mid);
    if (std::abs(h - h_min) <= tol) return {mid, true};
    if (h > h_min)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
  }
  // Bracket collapsed to adjacent doubles: keep the side satisfying H >= h_min.
  return {lo, std::abs(h_at(lo) - h_min) <= tol};
}

double solve_eta(std::span<const double> gaps, double h_min, double tol) {
  return solve_eta_detailed(gaps, h_min, tol).eta;
}

double DroWeights::weighted_objective() const {
  double s = 0.0;
  for (std::size_t i = 0; i < gaps.size(); ++i) s += weights[i] * gaps[i];
  return s;
}

DroWeights build_dro_weights(std::vector<ThetaParams> thetas, std::vector<double> gaps,
                             double c_frac, double tol) {
  if (thetas.size() != gaps.size()) throw InvalidArgument("build_dro_weights: size mismatch");
  if (gaps.empty()) throw InvalidArgument("build_dro_weights: no surviving trials");
  if (!(c_frac > 0.0 && c_frac < 1.0)) throw InvalidArgument("c_frac must lie in (0,1)");
  DroWeights q;
  q.c_frac = c_frac;
  q.h_min = c_frac * std::log(static_cast<double>(gaps.size()));
  q.eta = gaps.size() == 1 ? 0.0 : solve_eta(gaps, q.h_min, tol);
  q.weights = softmax_weights(gaps, q.eta);
  q.entropy = entropy(q.weights);
  q.thetas = std::move(thetas);
  q.gaps = std::move(gaps);
  return q;
}

}  // namespace rtfm
