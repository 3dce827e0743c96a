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

#include "rtfm/scm_generator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <boost/math/distributions/normal.hpp>

namespace rtfm {

namespace {

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

int round_to_int(double v) { return static_cast<int>(std::lround(v)); }

template <typename T, std::size_t N>
T epsilon_greedy(T preferred, const std::array<T, N>& options, Rng& rng) {
  // Keep the preferred option with probability 1 - epsilon, otherwise draw
  // uniformly over all options.
  if (!rng.bernoulli(kEpsilonGreedy)) return preferred;
  return options[rng.index(N)];
}

double activate(Activation a, double v) {
  switch (a) {
    case Activation::kRelu: return v > 0.0 ? v : 0.0;
    case Activation::kElu: return v > 0.0 ? v : std::expm1(v);
    case Activation::kIdentity: return v;
    case Activation::kTanh: return std::tanh(v);
  }
  return v;
}

Eigen::MatrixXd draw_inputs(InputDistribution dist, int rows, int cols, Rng& rng) {
  Eigen::MatrixXd in(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) {
      switch (dist) {
        case InputDistribution::kExponential: in(r, c) = rng.exponential(); break;
        case InputDistribution::kUniform: in(r, c) = rng.uniform(); break;
        case InputDistribution::kNormal: in(r, c) = rng.normal(); break;
      }
    }
  // Standardize per column over the batch.
  for (int c = 0; c < cols; ++c) {
    auto col = in.col(c);
    const double mean = col.mean();
    col.array() -= mean;
    const double sd = std::sqrt(col.squaredNorm() / std::max(1, rows));
    if (sd > 0.0) col /= sd;
  }
  return in;
}

}  // namespace

void ScmHyperparams::validate() const {
  auto in = [](int v, int lo, int hi) { return v >= lo && v <= hi; };
  auto unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
  if (!in(hidden_size, 3, 256) || !in(num_layers, 1, 12) || !in(num_inputs, 1, 15) ||
      !in(num_features, 2, 200) || !in(num_classes, 2, 10))
    throw InvalidArgument("scm hyperparameters outside their ranges");
  if (!unit(cat_ratio) || !unit(ordered_cat_ratio) || !unit(missing_ratio))
    throw InvalidArgument("scm ratios must lie in [0,1]");
}

double truncated_normal(double mean, double sd, double lo, double hi, Rng& rng) {
  if (!std::isfinite(mean) || !std::isfinite(sd) || !std::isfinite(lo) || !std::isfinite(hi))
    throw InvalidArgument("truncated_normal: non-finite argument");
  if (!(sd > 0.0)) throw InvalidArgument("truncated_normal: sd must be positive");
  if (!(lo < hi)) throw InvalidArgument("truncated_normal: lo must be below hi");

  const double a = (lo - mean) / sd;
  const double b = (hi - mean) / sd;
  // Work in the lower tail where the CDF keeps its precision.
  const bool flip = a > 0.0;
  const double la = flip ? -b : a;
  const double lb = flip ? -a : b;
  const double pa = std_normal_cdf(la);
  const double pb = std_normal_cdf(lb);

  double z;
  if (pb - pa > 0.25) {
    // Plain rejection: exact and cheap when the window holds enough mass.
    do {
      z = rng.normal();
    } while (z < la || z > lb);
  } else {
    static const boost::math::normal_distribution<double> kStd(0.0, 1.0);
    const double u = pa + (pb - pa) * rng.uniform_open();
    z = (u > 0.0 && u < 1.0) ? boost::math::quantile(kStd, u) : 0.5 * (la + lb);
    z = std::clamp(z, la, lb);
  }
  if (flip) z = -z;
  return std::clamp(mean + sd * z, lo, hi);
}

ScmHyperparams sample_hyperparams(const ThetaParams& theta, Rng& rng) {
  theta.validate();
  const MlpSize size = theta.mlp_size();
  ScmHyperparams hp;
  hp.hidden_size = round_to_int(truncated_normal(size.hidden, 10.0, 3, 256, rng));
  hp.num_layers = round_to_int(truncated_normal(size.layers, 1.0, 1, 12, rng));
  hp.num_inputs = round_to_int(truncated_normal(size.inputs, 1.0, 1, 15, rng));
  hp.num_features = round_to_int(
      truncated_normal(theta.mu_num_features, theta.mu_num_features / 4.0, 2, 200, rng));
  hp.num_classes = round_to_int(truncated_normal(theta.mu_num_classes, 1.0, 2, 10, rng));
  hp.cat_ratio = truncated_normal(theta.mu_cat_ratio(), 0.1, 0.0, 1.0, rng);
  hp.ordered_cat_ratio = truncated_normal(theta.mu_ordered_cat_ratio(), 0.1, 0.0, 1.0, rng);
  hp.missing_ratio = truncated_normal(theta.mu_missing_ratio(), 0.1, 0.0, 1.0, rng);
  hp.activation = epsilon_greedy(theta.activation, kActivations, rng);
  hp.input_distribution = epsilon_greedy(theta.input_distribution, kInputDistributions, rng);
  return hp;
}

ScmInstance build_scm(const ScmHyperparams& hp, Rng& rng) {
  hp.validate();
  const int h = hp.hidden_size, l = hp.num_layers;
  if (hp.num_features + 1 > h * l)
    throw Error("infeasible-feature-count",
                "scm: " + std::to_string(hp.num_features) + " features need more than " +
                    std::to_string(h * l) + " hidden units");

  ScmInstance scm;
  scm.hyperparams = hp;
  for (int layer = 0; layer < l; ++layer) {
    const int fan_in = layer == 0 ? hp.num_inputs : h;
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Eigen::MatrixXd w(h, fan_in);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal(0.0, scale);
    Eigen::VectorXd b(h);
    for (Eigen::Index i = 0; i < h; ++i) b[i] = rng.normal(0.0, scale);
    scm.weights.push_back(std::move(w));
    scm.biases.push_back(std::move(b));
  }

  scm.target_node = {l - 1, static_cast<int>(rng.index(static_cast<std::size_t>(h)))};
  std::vector<NodeIndex> pool;
  pool.reserve(static_cast<std::size_t>(h * l));
  for (int layer = 0; layer < l; ++layer)
    for (int unit = 0; unit < h; ++unit)
      if (NodeIndex{layer, unit} != scm.target_node) pool.push_back({layer, unit});
  // Partial Fisher-Yates: the first num_features entries form the sample.
  for (int i = 0; i < hp.num_features; ++i) {
    const auto j = static_cast<std::size_t>(i) + rng.index(pool.size() - static_cast<std::size_t>(i));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
  }
  scm.feature_nodes.assign(pool.begin(), pool.begin() + hp.num_features);

  const int z = hp.num_features;
  const int n_cat = round_to_int(hp.cat_ratio * z);
  const int n_ordered = round_to_int(hp.ordered_cat_ratio * n_cat);
  std::vector<int> order(static_cast<std::size_t>(z));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  scm.categorical.assign(static_cast<std::size_t>(z), std::nullopt);
  for (int i = 0; i < n_cat; ++i) {
    CategoricalSpec spec;
    spec.num_bins = static_cast<int>(rng.uniform_int(2, 10));
    spec.ordered = i < n_ordered;
    if (!spec.ordered) {
      spec.permutation.resize(static_cast<std::size_t>(spec.num_bins));
      std::iota(spec.permutation.begin(), spec.permutation.end(), 0);
      rng.shuffle(spec.permutation);
    }
    scm.categorical[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = std::move(spec);
  }
  return scm;
}

ScmInstance sample_scm(const ThetaParams& theta, Rng& rng) {
  for (int attempt = 0;; ++attempt) {
    const ScmHyperparams hp = sample_hyperparams(theta, rng);
    try {
      return build_scm(hp, rng);
    } catch (const Error& e) {
      if (e.code() != "infeasible-feature-count" || attempt + 1 >= kMaxScmRebuilds) throw;
    }
  }
}

std::vector<Eigen::MatrixXd> propagate(const ScmInstance& scm, const Eigen::MatrixXd& inputs) {
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(scm.weights.size());
  const Eigen::MatrixXd* prev = &inputs;
  for (std::size_t layer = 0; layer < scm.weights.size(); ++layer) {
    Eigen::MatrixXd a = (*prev) * scm.weights[layer].transpose();
    a.rowwise() += scm.biases[layer].transpose();
    const Activation act = scm.hyperparams.activation;
    a = a.unaryExpr([act](double v) { return activate(act, v); });
    acts.push_back(std::move(a));
    prev = &acts.back();
  }
  return acts;
}

std::vector<int> quantile_bins(const Eigen::Ref<const Eigen::VectorXd>& values, int bins) {
  const auto n = static_cast<std::size_t>(values.size());
  std::vector<double> sorted(values.data(), values.data() + n);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> thresholds;
  for (int j = 1; j < bins; ++j) {
    const std::size_t idx = std::max<std::size_t>(1, static_cast<std::size_t>(j) * n /
                                                         static_cast<std::size_t>(bins));
    thresholds.push_back(sorted[std::min(idx, n) - 1]);
  }
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = values[static_cast<Eigen::Index>(i)];
    out[i] = static_cast<int>(std::lower_bound(thresholds.begin(), thresholds.end(), v) -
                              thresholds.begin());
  }
  return out;
}

TabularDataset sample_dataset(const ScmInstance& scm_in, int n_train, int n_test, Rng& rng) {
  const ScmHyperparams& hp = scm_in.hyperparams;
  if (n_train < hp.num_classes)
    throw InvalidArgument("sample_dataset: n_train must be at least the class count");
  if (n_test < 1) throw InvalidArgument("sample_dataset: n_test must be positive");
  const int n = n_train + n_test;

  ScmInstance rebuilt;
  const ScmInstance* scm = &scm_in;
  std::vector<int> labels;
  std::vector<Eigen::MatrixXd> acts;
  for (int attempt = 0;; ++attempt) {
    const Eigen::MatrixXd inputs = draw_inputs(hp.input_distribution, n, hp.num_inputs, rng);
    acts = propagate(*scm, inputs);
    const auto& t = scm->target_node;
    labels = quantile_bins(acts[static_cast<std::size_t>(t.layer)].col(t.unit), hp.num_classes);
    if (std::set<int>(labels.begin(), labels.end()).size() >= 2) break;
    if (attempt + 1 >= kMaxScmRebuilds)
      throw Error("degenerate-generator", "target activation is constant for every redraw");
    rebuilt = build_scm(hp, rng);
    rebuilt.seed = scm_in.seed;
    scm = &rebuilt;
  }

  TabularDataset ds;
  const int p = hp.num_features;
  ds.x.resize(n, p);
  ds.missing = MissingMask::Constant(n, p, false);
  ds.feature_kinds.resize(static_cast<std::size_t>(p));
  for (int f = 0; f < p; ++f) {
    const auto& node = scm->feature_nodes[static_cast<std::size_t>(f)];
    const auto column = acts[static_cast<std::size_t>(node.layer)].col(node.unit);
    const auto& cat = scm->categorical[static_cast<std::size_t>(f)];
    if (!cat) {
      ds.x.col(f) = column;
      continue;
    }
    const std::vector<int> codes = quantile_bins(column, cat->num_bins);
    for (int r = 0; r < n; ++r) {
      const int code = codes[static_cast<std::size_t>(r)];
      ds.x(r, f) = cat->ordered ? code : cat->permutation[static_cast<std::size_t>(code)];
    }
    ds.feature_kinds[static_cast<std::size_t>(f)] = FeatureKind::categorical(cat->num_bins, cat->ordered);
  }
  ds.y = std::move(labels);
  ds.n_classes = hp.num_classes;

  const std::set<int> present(ds.y.begin(), ds.y.end());
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  bool covered = false;
  for (int attempt = 0; attempt < kMaxSplitResamples && !covered; ++attempt) {
    rng.shuffle(perm);
    std::set<int> in_train;
    for (int i = 0; i < n_train; ++i) in_train.insert(ds.y[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])]);
    covered = in_train.size() == present.size();
  }
  if (!covered) throw Error("class-coverage", "no split placed every class in the train rows");
  ds.train_indices.assign(perm.begin(), perm.begin() + n_train);
  ds.test_indices.assign(perm.begin() + n_train, perm.end());
  std::sort(ds.train_indices.begin(), ds.train_indices.end());
  std::sort(ds.test_indices.begin(), ds.test_indices.end());

  if (hp.missing_ratio > 0.0) {
    for (int r : ds.train_indices)
      for (int f = 0; f < p; ++f)
        if (rng.bernoulli(hp.missing_ratio)) {
          ds.missing(r, f) = true;
          ds.x(r, f) = std::numeric_limits<double>::quiet_NaN();
        }
  }
  return ds;
}

TabularDataset generate_dataset(const ThetaParams& theta, std::uint64_t seed, int n_train,
                                int n_test) {
  Rng rng(seed);
  ScmInstance scm = sample_scm(theta, rng);
  scm.seed = seed;
  TabularDataset ds = sample_dataset(scm, n_train, n_test, rng);
  ds.provenance = Provenance{theta, seed};
  return ds;
}

}  // namespace rtfm
