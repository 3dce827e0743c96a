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

#include <doctest.h>

#include <cmath>

#include "rtfm/common.hpp"
#include "rtfm/dro.hpp"

using namespace rtfm;

namespace {

std::vector<ThetaParams> thetas(std::size_t n) { return std::vector<ThetaParams>(n); }

double h_of(std::vector<double> q) { return entropy(q); }

}  // namespace

TEST_CASE("softmax examples") {
  const std::vector<double> equal{1.0, 1.0};
  auto q = softmax_weights(equal, 3.0);
  CHECK(q[0] == doctest::Approx(0.5));
  CHECK(q[1] == doctest::Approx(0.5));
  const std::vector<double> g{std::log(2.0), 0.0};
  q = softmax_weights(g, 1.0);
  CHECK(q[0] == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(q[1] == doctest::Approx(1.0 / 3).epsilon(1e-12));
  // Large eta must not overflow.
  const std::vector<double> big{1000.0, 0.0};
  q = softmax_weights(big, 1e6);
  CHECK(q[0] == 1.0);
  CHECK(q[1] == 0.0);
}

TEST_CASE("entropy examples") {
  CHECK(h_of(std::vector<double>(100, 0.01)) == doctest::Approx(std::log(100.0)).epsilon(1e-12));
  CHECK(h_of({1.0, 0.0, 0.0}) == 0.0);
  CHECK(h_of({0.8, 0.2}) == doctest::Approx(0.500402).epsilon(1e-6));
}

TEST_CASE("eta for a two point problem") {
  const std::vector<double> g{1.0, 0.0};
  const double h = h_of({0.8, 0.2});
  const double eta = solve_eta(g, h);
  // Grid-scan oracle.
  double best = 0, best_err = 1e9;
  for (int i = 0; i <= 400000; ++i) {
    const double e = i * 1e-5;
    const double err = std::abs(entropy(softmax_weights(g, e)) - h);
    if (err < best_err) best_err = err, best = e;
  }
  CHECK(best == doctest::Approx(1.386294).epsilon(1e-5));
  CHECK(eta == doctest::Approx(std::log(4.0)).epsilon(1e-6));
  CHECK(std::abs(eta - best) < 2e-5);
}

TEST_CASE("equal gaps give eta zero") {
  const std::vector<double> g(7, 0.3);
  CHECK(solve_eta(g, 0.5 * std::log(7.0)) == 0.0);
  const auto w = build_dro_weights(thetas(7), g, 0.5);
  for (double q : w.weights) CHECK(q == doctest::Approx(1.0 / 7));
}

TEST_CASE("entropy decreases monotonically in eta") {
  Rng rng(1);
  std::vector<double> g(20);
  for (auto& v : g) v = rng.normal();
  double prev = entropy(softmax_weights(g, 0.0));
  CHECK(prev == doctest::Approx(std::log(20.0)));
  for (int i = 1; i < 200; ++i) {
    const double h = entropy(softmax_weights(g, i * 0.05));
    CHECK(h < prev);
    prev = h;
  }
}

TEST_CASE("solver hits the entropy floor on random problems") {
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng.index(50);
    std::vector<double> g(n);
    for (auto& v : g) v = rng.normal(0.0, 0.5);
    const double c = 0.05 + 0.9 * rng.uniform();
    const auto w = build_dro_weights(thetas(n), g, c);
    CHECK(std::abs(w.entropy - c * std::log(double(n))) <= 1e-9);
    CHECK(w.entropy >= w.h_min - 1e-9);
    double sum = 0;
    for (double q : w.weights) sum += q;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("softmax solution is optimal on a three point simplex grid") {
  const std::vector<double> g{0.9, 0.2, -0.4};
  const double c = 0.6;
  const auto w = build_dro_weights(thetas(3), g, c);
  double best = -1e9;
  const int steps = 200;
  for (int i = 0; i <= steps; ++i)
    for (int j = 0; i + j <= steps; ++j) {
      const std::vector<double> q{i / double(steps), j / double(steps), (steps - i - j) / double(steps)};
      if (entropy(q) < w.h_min) continue;
      best = std::max(best, q[0] * g[0] + q[1] * g[1] + q[2] * g[2]);
    }
  CHECK(w.weighted_objective() >= best - 1e-3);
  CHECK(w.weighted_objective() <= best + 1e-3);
}

TEST_CASE("weights are invariant to shifts and scale eta inversely") {
  const std::vector<double> g{0.1, 0.5, 0.3, -0.2};
  std::vector<double> shifted, scaled;
  for (double v : g) shifted.push_back(v + 10.0), scaled.push_back(4.0 * v);
  const auto a = build_dro_weights(thetas(4), g, 0.5);
  const auto b = build_dro_weights(thetas(4), shifted, 0.5);
  const auto s = build_dro_weights(thetas(4), scaled, 0.5);
  for (int i = 0; i < 4; ++i) {
    CHECK(a.weights[i] == doctest::Approx(b.weights[i]).epsilon(1e-7));
    CHECK(a.weights[i] == doctest::Approx(s.weights[i]).epsilon(1e-7));
  }
  CHECK(s.eta == doctest::Approx(a.eta / 4).epsilon(1e-6));
}

TEST_CASE("solution does not depend on the initial bracket") {
  const std::vector<double> g{2.0, 1.0, 0.5, 0.0};
  const double h = 0.3 * std::log(4.0);
  const double ref = solve_eta(g, h);
  for (double up : {1e-3, 0.5, 3.0, 100.0}) {
    const auto s = solve_eta_detailed(g, h, 1e-12, up);
    CHECK(s.converged);
    CHECK(s.eta == doctest::Approx(ref).epsilon(1e-6));
  }
}

TEST_CASE("single point and error cases") {
  const auto one = build_dro_weights(thetas(1), {0.4}, 0.5);
  CHECK(one.weights == std::vector<double>{1.0});
  CHECK(one.eta == 0.0);
  CHECK_THROWS_AS(build_dro_weights({}, {}, 0.5), InvalidArgument);
  CHECK_THROWS_AS(build_dro_weights(thetas(2), {0.1, 0.2}, 1.0), InvalidArgument);
  CHECK_THROWS_AS(build_dro_weights(thetas(2), {0.1, 0.2}, 0.0), InvalidArgument);
  CHECK_THROWS_AS(build_dro_weights(thetas(2), {0.1}, 0.5), InvalidArgument);
  const std::vector<double> bad{0.1, NAN};
  CHECK_THROWS_AS(solve_eta(bad, 0.3), InvalidArgument);
  const std::vector<double> g{0.1, 0.2};
  CHECK_THROWS_AS(solve_eta(g, 2.0), InvalidArgument);
  CHECK_THROWS_AS(softmax_weights(g, -1.0), InvalidArgument);
}

TEST_CASE("nearly tied top gaps hit the bracket cap") {
  const std::vector<double> g{1.0, 1.0, 0.0};
  // The floor lies below log 2, which no eta can reach.
  const auto s = solve_eta_detailed(g, 0.5, 1e-9);
  CHECK_FALSE(s.converged);
  CHECK(s.eta == kMaxEta);
}
