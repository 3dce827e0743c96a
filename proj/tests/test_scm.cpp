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
#include <set>

#include "rtfm/scm_generator.hpp"

using namespace rtfm;

namespace {

// Composite Simpson rule on [lo, hi].
template <typename F>
double simpson(F f, double lo, double hi, int n = 20000) {
  const double h = (hi - lo) / n;
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

double truncnorm_mean_quadrature(double mean, double sd, double lo, double hi) {
  auto pdf = [&](double x) { return std::exp(-0.5 * std::pow((x - mean) / sd, 2)); };
  return simpson([&](double x) { return x * pdf(x); }, lo, hi) / simpson(pdf, lo, hi);
}

ScmHyperparams small_hp() {
  ScmHyperparams hp;
  hp.hidden_size = 5;
  hp.num_layers = 3;
  hp.num_inputs = 2;
  hp.num_features = 2;
  hp.num_classes = 2;
  hp.activation = Activation::kTanh;
  return hp;
}

}  // namespace

TEST_CASE("truncated normal examples") {
  Rng rng(1);
  const int n = 100000;
  double s1 = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double a = truncated_normal(0.5, 0.1, 0, 1, rng);
    const double b = truncated_normal(1.0, 0.1, 0, 1, rng);
    REQUIRE(a >= 0.0);
    REQUIRE(a <= 1.0);
    REQUIRE(b >= 0.0);
    REQUIRE(b <= 1.0);
    s1 += a;
    s2 += b;
  }
  CHECK(std::abs(s1 / n - 0.5) <= 0.01);
  const double oracle = truncnorm_mean_quadrature(1.0, 0.1, 0.0, 1.0);
  CHECK(oracle == doctest::Approx(0.920212).epsilon(1e-5));
  CHECK(std::abs(s2 / n - oracle) <= 0.005);

  for (int i = 0; i < 1000; ++i) {
    const double v = truncated_normal(0.5, 1e-6, 0, 1, rng);
    REQUIRE(std::abs(v - 0.5) <= 1e-5);
  }
}

TEST_CASE("truncated normal far tail stays in range") {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const double v = truncated_normal(0.0, 0.1, 0.9, 1.0, rng);
    REQUIRE(v >= 0.9);
    REQUIRE(v <= 1.0);
  }
  CHECK_THROWS_AS(truncated_normal(NAN, 1, 0, 1, rng), InvalidArgument);
  CHECK_THROWS_AS(truncated_normal(0, 0, 0, 1, rng), InvalidArgument);
  CHECK_THROWS_AS(truncated_normal(0, 1, 1, 0, rng), InvalidArgument);
}

TEST_CASE("sample_hyperparams examples") {
  Rng rng(3);
  ThetaParams theta;
  theta.activation = Activation::kTanh;
  theta.missing_ratio_tenths = 0;
  theta.mu_num_classes = 2;
  const int n = 10000;
  double m_sum = 0;
  int tanh_count = 0;
  for (int i = 0; i < n; ++i) {
    const ScmHyperparams hp = sample_hyperparams(theta, rng);
    hp.validate();
    m_sum += hp.missing_ratio;
    tanh_count += hp.activation == Activation::kTanh;
    REQUIRE(hp.num_classes >= 2);
  }
  // Mean of TruncNorm(0, 0.1) on [0, 1].
  const double m_oracle = truncnorm_mean_quadrature(0.0, 0.1, 0.0, 1.0);
  CHECK(m_oracle == doctest::Approx(0.0797885).epsilon(1e-5));
  CHECK(m_sum / n <= 0.08);
  CHECK(std::abs(m_sum / n - m_oracle) < 0.002);
  CHECK(std::abs(tanh_count / double(n) - 0.775) <= 0.01);
}

TEST_CASE("build_scm structure") {
  Rng rng(4);
  SUBCASE("zero categorical ratio") {
    ScmHyperparams hp = small_hp();
    for (int i = 0; i < 20; ++i) {
      const ScmInstance scm = build_scm(hp, rng);
      for (const auto& c : scm.categorical) CHECK_FALSE(c.has_value());
    }
  }
  SUBCASE("two features on a 3x5 MLP") {
    ScmHyperparams hp = small_hp();
    for (int i = 0; i < 50; ++i) {
      const ScmInstance scm = build_scm(hp, rng);
      REQUIRE(scm.feature_nodes.size() == 2);
      CHECK(scm.feature_nodes[0] != scm.feature_nodes[1]);
      for (const auto& f : scm.feature_nodes) CHECK(f != scm.target_node);
      CHECK(scm.target_node.layer == 2);
      REQUIRE(scm.weights.size() == 3);
      CHECK(scm.weights[0].rows() == 5);
      CHECK(scm.weights[0].cols() == 2);
      CHECK(scm.weights[1].rows() == 5);
      CHECK(scm.weights[1].cols() == 5);
    }
  }
  SUBCASE("all categorical and ordered") {
    ScmHyperparams hp = small_hp();
    hp.cat_ratio = 1.0;
    hp.ordered_cat_ratio = 1.0;
    const ScmInstance scm = build_scm(hp, rng);
    for (const auto& c : scm.categorical) {
      REQUIRE(c.has_value());
      CHECK(c->ordered);
      CHECK(c->permutation.empty());
      CHECK(c->num_bins >= 2);
      CHECK(c->num_bins <= 10);
    }
  }
  SUBCASE("unordered columns carry a permutation") {
    ScmHyperparams hp = small_hp();
    hp.cat_ratio = 1.0;
    hp.ordered_cat_ratio = 0.0;
    const ScmInstance scm = build_scm(hp, rng);
    for (const auto& c : scm.categorical) {
      REQUIRE(c.has_value());
      CHECK_FALSE(c->ordered);
      std::vector<int> sorted = c->permutation;
      std::sort(sorted.begin(), sorted.end());
      REQUIRE(static_cast<int>(sorted.size()) == c->num_bins);
      for (int k = 0; k < c->num_bins; ++k) CHECK(sorted[static_cast<std::size_t>(k)] == k);
    }
  }
  SUBCASE("infeasible feature count") {
    ScmHyperparams hp = small_hp();
    hp.num_layers = 1;
    hp.num_features = 5;
    CHECK_THROWS_WITH_AS(build_scm(hp, rng), doctest::Contains("hidden units"), Error);
  }
}

TEST_CASE("sample_dataset examples") {
  Rng rng(5);
  SUBCASE("no missingness at m = 0") {
    ScmInstance scm = build_scm(small_hp(), rng);
    const TabularDataset ds = sample_dataset(scm, 100, 50, rng);
    CHECK(ds.missing.count() == 0);
  }
  SUBCASE("equal-mass binary labels") {
    ScmHyperparams hp = small_hp();
    hp.num_layers = 2;
    ScmInstance scm = build_scm(hp, rng);
    const TabularDataset ds = sample_dataset(scm, 700, 300, rng);
    const auto zeros = std::count(ds.y.begin(), ds.y.end(), 0);
    CHECK(zeros >= 499);
    CHECK(zeros <= 501);
  }
  SUBCASE("identity propagation") {
    ScmInstance scm;
    scm.hyperparams = small_hp();
    scm.hyperparams.activation = Activation::kIdentity;
    scm.hyperparams.num_layers = 1;
    scm.hyperparams.hidden_size = 3;
    scm.hyperparams.num_inputs = 3;
    scm.weights = {Eigen::MatrixXd::Identity(3, 3)};
    scm.biases = {Eigen::VectorXd::Zero(3)};
    scm.feature_nodes = {{0, 2}, {0, 0}};
    scm.target_node = {0, 1};
    scm.categorical.assign(2, std::nullopt);
    Eigen::MatrixXd inputs = Eigen::MatrixXd::Random(40, 3);
    const auto acts = propagate(scm, inputs);
    CHECK(acts[0].isApprox(inputs, 0.0));
    const TabularDataset ds = sample_dataset(scm, 300, 100, rng);
    // Features are the standardized inputs.
    for (int f = 0; f < 2; ++f) {
      const Eigen::VectorXd col = ds.x.col(f);
      const double mean = col.mean();
      const double var = (col.array() - mean).square().mean();
      CHECK(std::abs(mean) < 1e-9);
      CHECK(std::abs(var - 1.0) < 0.01);
    }
  }
}

TEST_CASE("generated datasets satisfy the invariants") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng pick(seed);
    ThetaParams theta;
    theta.mlp_size_index = static_cast<int>(pick.index(5));
    theta.mu_num_features = 25;
    theta.mu_num_classes = kNumClassesGrid[pick.index(5)];
    theta.cat_ratio_tenths = static_cast<int>(pick.index(11));
    theta.ordered_cat_ratio_tenths = static_cast<int>(pick.index(11));
    theta.missing_ratio_tenths = static_cast<int>(pick.index(11));
    theta.activation = static_cast<Activation>(pick.index(4));
    theta.input_distribution = static_cast<InputDistribution>(pick.index(3));
    TabularDataset ds;
    try {
      ds = generate_dataset(theta, seed, 64, 32);
    } catch (const Error&) {
      continue;
    }
    ds.validate();
    CHECK(ds.rows() == 96);
    std::set<int> train_classes;
    for (int r : ds.train_indices) train_classes.insert(ds.y[static_cast<std::size_t>(r)]);
    CHECK(train_classes == std::set<int>(ds.y.begin(), ds.y.end()));
    for (int r : ds.test_indices) CHECK_FALSE(ds.missing.row(r).any());
    const TabularDataset again = generate_dataset(theta, seed, 64, 32);
    CHECK(dataset_hash(again) == dataset_hash(ds));
  }
}

TEST_CASE("quantile bins are equal mass") {
  Eigen::VectorXd v(10);
  v << 5, 1, 9, 3, 7, 2, 8, 4, 6, 0;
  const auto bins = quantile_bins(v, 2);
  CHECK(std::count(bins.begin(), bins.end(), 0) == 5);
  const auto five = quantile_bins(v, 5);
  for (int b = 0; b < 5; ++b) CHECK(std::count(five.begin(), five.end(), b) == 2);
  CHECK(quantile_bins(Eigen::VectorXd::Constant(6, 1.0), 3) == std::vector<int>(6, 0));
}

TEST_CASE("categorical fraction tracks mu_r_cat") {
  ThetaParams theta;
  theta.mlp_size_index = 2;
  theta.mu_num_features = 25;
  theta.cat_ratio_tenths = 5;
  Rng rng(6);
  double total = 0;
  const int n = 2000;
  for (int i = 0; i < n; ++i) {
    const ScmHyperparams hp = sample_hyperparams(theta, rng);
    total += std::round(hp.cat_ratio * hp.num_features) / hp.num_features;
  }
  CHECK(std::abs(total / n - 0.5) < 0.03);
}
