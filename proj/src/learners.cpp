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

#include "rtfm/learners.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "rtfm/common.hpp"
#include "rtfm/predictor.hpp"

namespace rtfm {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Eigen::MatrixXd one_hot(const std::vector<int>& y, int classes) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(y.size()), classes);
  for (std::size_t i = 0; i < y.size(); ++i) m(static_cast<Eigen::Index>(i), y[i]) = 1.0;
  return m;
}

void softmax_rows(Eigen::MatrixXd& logits) {
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
}

Eigen::MatrixXd with_bias(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out(x.rows(), x.cols() + 1);
  out << x, Eigen::VectorXd::Ones(x.rows());
  return out;
}

// ---------------------------------------------------------------------------
// Logistic regression: multinomial, full-batch gradient descent.

Eigen::MatrixXd logistic_regression(const LogisticRegressionParams& params, const PreparedData& d) {
  const Eigen::MatrixXd x = with_bias(d.train_x);
  const Eigen::MatrixXd y = one_hot(d.train_y, d.n_classes);
  const double n = static_cast<double>(x.rows());
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(x.cols(), d.n_classes);
  for (int it = 0; it < params.iterations; ++it) {
    Eigen::MatrixXd p = x * w;
    softmax_rows(p);
    Eigen::MatrixXd grad = x.transpose() * (p - y) / n;
    grad.topRows(w.rows() - 1) += params.l2 * w.topRows(w.rows() - 1);
    w -= params.learning_rate * grad;
  }
  Eigen::MatrixXd out = with_bias(d.test_x) * w;
  softmax_rows(out);
  return out;
}

// ---------------------------------------------------------------------------
// Random forest: bootstrap CART trees with Gini splits.

struct ClassTreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> distribution;
};

class ClassTreeBuilder {
 public:
  ClassTreeBuilder(const PreparedData& d, const RandomForestParams& params, Rng& rng)
      : d_(d), params_(params), rng_(rng) {
    const int p = static_cast<int>(d.train_x.cols());
    mtry_ = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(p)))));
  }

  std::vector<ClassTreeNode> build(std::vector<int> samples) {
    nodes_.clear();
    grow(samples, 0);
    return std::move(nodes_);
  }

 private:
  int grow(std::vector<int>& samples, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    std::vector<double> counts(static_cast<std::size_t>(d_.n_classes), 0.0);
    for (int s : samples) counts[static_cast<std::size_t>(d_.train_y[static_cast<std::size_t>(s)])] += 1.0;
    const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }) <= 1;
    int best_feature = -1;
    double best_threshold = 0.0;
    if (!pure && depth < params_.max_depth &&
        static_cast<int>(samples.size()) >= params_.min_samples_split)
      find_split(samples, counts, best_feature, best_threshold);
    if (best_feature < 0) {
      const double n = static_cast<double>(samples.size());
      for (double& c : counts) c /= n;
      nodes_[static_cast<std::size_t>(id)].distribution = std::move(counts);
      return id;
    }
    std::vector<int> left, right;
    for (int s : samples)
      (d_.train_x(s, best_feature) <= best_threshold ? left : right).push_back(s);
    samples.clear();
    samples.shrink_to_fit();
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    auto& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  void find_split(std::vector<int>& samples, const std::vector<double>& total, int& best_feature,
                  double& best_threshold) {
    const int p = static_cast<int>(d_.train_x.cols());
    std::vector<int> features(static_cast<std::size_t>(p));
    std::iota(features.begin(), features.end(), 0);
    for (int i = 0; i < mtry_; ++i)
      std::swap(features[static_cast<std::size_t>(i)],
                features[static_cast<std::size_t>(i) + rng_.index(features.size() - static_cast<std::size_t>(i))]);
    const double n = static_cast<double>(samples.size());
    double total_sq = 0.0;
    for (double c : total) total_sq += c * c;
    // Parent score; a split must beat it.
    double best = total_sq / n + 1e-12;
    std::vector<double> left(total.size());
    for (int fi = 0; fi < mtry_; ++fi) {
      const int f = features[static_cast<std::size_t>(fi)];
      std::sort(samples.begin(), samples.end(), [&](int a, int b) {
        const double va = d_.train_x(a, f), vb = d_.train_x(b, f);
        return va < vb || (va == vb && a < b);
      });
      std::fill(left.begin(), left.end(), 0.0);
      double left_sq = 0.0, right_sq = total_sq;
      for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
        const auto c = static_cast<std::size_t>(d_.train_y[static_cast<std::size_t>(samples[i])]);
        const double lc = left[c], rc = total[c] - lc;
        left_sq += 2.0 * lc + 1.0;
        right_sq -= 2.0 * rc - 1.0;
        left[c] = lc + 1.0;
        const double v = d_.train_x(samples[i], f), next = d_.train_x(samples[i + 1], f);
        if (v == next) continue;
        const double nl = static_cast<double>(i + 1), nr = n - nl;
        const double score = left_sq / nl + right_sq / nr;
        if (score > best) {
          best = score;
          best_feature = f;
          best_threshold = 0.5 * (v + next);
        }
      }
    }
  }

  const PreparedData& d_;
  const RandomForestParams& params_;
  Rng& rng_;
  int mtry_ = 1;
  std::vector<ClassTreeNode> nodes_;
};

const std::vector<double>& leaf_of(const std::vector<ClassTreeNode>& tree,
                                   const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  int id = 0;
  while (tree[static_cast<std::size_t>(id)].feature >= 0) {
    const auto& node = tree[static_cast<std::size_t>(id)];
    id = row[node.feature] <= node.threshold ? node.left : node.right;
  }
  return tree[static_cast<std::size_t>(id)].distribution;
}

Eigen::MatrixXd random_forest(const RandomForestParams& params, const PreparedData& d, Rng& rng) {
  const auto n = static_cast<std::size_t>(d.train_x.rows());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d.test_x.rows(), d.n_classes);
  ClassTreeBuilder builder(d, params, rng);
  for (int t = 0; t < params.trees; ++t) {
    std::vector<int> bootstrap(n);
    for (auto& s : bootstrap) s = static_cast<int>(rng.index(n));
    const auto tree = builder.build(std::move(bootstrap));
    for (Eigen::Index r = 0; r < d.test_x.rows(); ++r) {
      const auto& dist = leaf_of(tree, d.test_x.row(r));
      for (int c = 0; c < d.n_classes; ++c) out(r, c) += dist[static_cast<std::size_t>(c)];
    }
  }
  return out / static_cast<double>(params.trees);
}

// ---------------------------------------------------------------------------
// Gradient boosting with small regression trees and softmax loss.

struct RegTreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

class BoostingTreeBuilder {
 public:
  explicit BoostingTreeBuilder(const PreparedData& d, int depth, int classes)
      : d_(d), depth_(depth), classes_(classes) {
    const auto p = static_cast<std::size_t>(d.train_x.cols());
    const auto n = static_cast<int>(d.train_x.rows());
    sorted_.resize(p);
    for (std::size_t f = 0; f < p; ++f) {
      auto& order = sorted_[f];
      order.resize(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), 0);
      const auto fi = static_cast<Eigen::Index>(f);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return d.train_x(a, fi) < d.train_x(b, fi);
      });
    }
  }

  // Least-squares tree on residuals; leaves take the multiclass Newton step.
  std::vector<RegTreeNode> fit(const Eigen::VectorXd& residual) {
    nodes_.clear();
    node_of_.assign(static_cast<std::size_t>(d_.train_x.rows()), 0);
    residual_ = &residual;
    nodes_.emplace_back();
    std::vector<int> frontier{0};
    for (int level = 0; level < depth_; ++level) {
      std::vector<int> next;
      for (int id : frontier) {
        if (!split(id)) continue;
        next.push_back(nodes_[static_cast<std::size_t>(id)].left);
        next.push_back(nodes_[static_cast<std::size_t>(id)].right);
      }
      frontier = std::move(next);
    }
    // Leaf values.
    std::vector<double> num(nodes_.size(), 0.0), den(nodes_.size(), 0.0);
    for (std::size_t i = 0; i < node_of_.size(); ++i) {
      const double r = residual[static_cast<Eigen::Index>(i)];
      num[static_cast<std::size_t>(node_of_[i])] += r;
      den[static_cast<std::size_t>(node_of_[i])] += std::abs(r) * (1.0 - std::abs(r));
    }
    const double k = static_cast<double>(classes_);
    for (std::size_t id = 0; id < nodes_.size(); ++id)
      if (nodes_[id].feature < 0)
        nodes_[id].value = den[id] > 1e-12 ? (k - 1.0) / k * num[id] / den[id] : 0.0;
    return nodes_;
  }

  static double evaluate(const std::vector<RegTreeNode>& tree,
                         const Eigen::Ref<const Eigen::RowVectorXd>& row) {
    int id = 0;
    while (tree[static_cast<std::size_t>(id)].feature >= 0) {
      const auto& node = tree[static_cast<std::size_t>(id)];
      id = row[node.feature] <= node.threshold ? node.left : node.right;
    }
    return tree[static_cast<std::size_t>(id)].value;
  }

 private:
  bool split(int id) {
    const auto& r = *residual_;
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < node_of_.size(); ++i)
      if (node_of_[i] == id) {
        sum += r[static_cast<Eigen::Index>(i)];
        ++count;
      }
    if (count < 2) return false;
    double best = sum * sum / count + 1e-12;
    int best_feature = -1;
    double best_threshold = 0.0;
    for (std::size_t f = 0; f < sorted_.size(); ++f) {
      const auto fi = static_cast<Eigen::Index>(f);
      double left_sum = 0.0;
      int left_count = 0;
      int prev = -1;
      for (int s : sorted_[f]) {
        if (node_of_[static_cast<std::size_t>(s)] != id) continue;
        if (prev >= 0 && d_.train_x(prev, fi) != d_.train_x(s, fi)) {
          const double right_sum = sum - left_sum;
          const int right_count = count - left_count;
          const double score = left_sum * left_sum / left_count + right_sum * right_sum / right_count;
          if (score > best) {
            best = score;
            best_feature = static_cast<int>(f);
            best_threshold = 0.5 * (d_.train_x(prev, fi) + d_.train_x(s, fi));
          }
        }
        left_sum += r[s];
        ++left_count;
        prev = s;
      }
    }
    if (best_feature < 0) return false;
    const int l = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    nodes_.emplace_back();
    auto& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = l + 1;
    for (std::size_t i = 0; i < node_of_.size(); ++i)
      if (node_of_[i] == id)
        node_of_[i] = d_.train_x(static_cast<Eigen::Index>(i), best_feature) <= best_threshold ? l : l + 1;
    return true;
  }

  const PreparedData& d_;
  int depth_;
  int classes_;
  std::vector<std::vector<int>> sorted_;
  std::vector<RegTreeNode> nodes_;
  std::vector<int> node_of_;
  const Eigen::VectorXd* residual_ = nullptr;
};

Eigen::MatrixXd boosted_stumps(const BoostedStumpsParams& params, const PreparedData& d) {
  const Eigen::MatrixXd y = one_hot(d.train_y, d.n_classes);
  Eigen::MatrixXd f_train = Eigen::MatrixXd::Zero(d.train_x.rows(), d.n_classes);
  Eigen::MatrixXd f_test = Eigen::MatrixXd::Zero(d.test_x.rows(), d.n_classes);
  BoostingTreeBuilder builder(d, params.depth, d.n_classes);
  for (int round = 0; round < params.rounds; ++round) {
    Eigen::MatrixXd p = f_train;
    softmax_rows(p);
    for (int c = 0; c < d.n_classes; ++c) {
      const Eigen::VectorXd residual = y.col(c) - p.col(c);
      const auto tree = builder.fit(residual);
      for (Eigen::Index r = 0; r < f_train.rows(); ++r)
        f_train(r, c) += params.learning_rate * BoostingTreeBuilder::evaluate(tree, d.train_x.row(r));
      for (Eigen::Index r = 0; r < f_test.rows(); ++r)
        f_test(r, c) += params.learning_rate * BoostingTreeBuilder::evaluate(tree, d.test_x.row(r));
    }
  }
  softmax_rows(f_test);
  return f_test;
}

// ---------------------------------------------------------------------------
// Distance-weighted k nearest neighbours.

Eigen::MatrixXd knn(const KnnParams& params, const PreparedData& d) {
  const Eigen::Index n = d.train_x.rows();
  const int k = static_cast<int>(std::min<Eigen::Index>(params.k, n));
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d.test_x.rows(), d.n_classes);
  std::vector<std::pair<double, int>> dist(static_cast<std::size_t>(n));
  for (Eigen::Index r = 0; r < d.test_x.rows(); ++r) {
    for (Eigen::Index j = 0; j < n; ++j)
      dist[static_cast<std::size_t>(j)] = {(d.train_x.row(j) - d.test_x.row(r)).norm(), static_cast<int>(j)};
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    for (int i = 0; i < k; ++i) {
      const auto [dd, j] = dist[static_cast<std::size_t>(i)];
      out(r, d.train_y[static_cast<std::size_t>(j)]) += 1.0 / (dd + 1e-12);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// One-hidden-layer ReLU network trained full-batch with Adam.

Eigen::MatrixXd mlp(const MlpParams& params, const PreparedData& d, Rng& rng) {
  const Eigen::Index p = d.train_x.cols(), h = params.hidden, c = d.n_classes;
  const double n = static_cast<double>(d.train_x.rows());
  auto init = [&rng](Eigen::Index rows, Eigen::Index cols, double sd) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, sd);
    return m;
  };
  Eigen::MatrixXd w1 = init(p, h, std::sqrt(2.0 / std::max<Eigen::Index>(1, p)));
  Eigen::RowVectorXd b1 = Eigen::RowVectorXd::Zero(h);
  Eigen::MatrixXd w2 = init(h, c, std::sqrt(1.0 / h));
  Eigen::RowVectorXd b2 = Eigen::RowVectorXd::Zero(c);

  struct Moments {
    Eigen::MatrixXd m, v;
  };
  auto zeros_like = [](const auto& a) { return Moments{Eigen::MatrixXd::Zero(a.rows(), a.cols()), Eigen::MatrixXd::Zero(a.rows(), a.cols())}; };
  Moments mw1 = zeros_like(w1), mb1 = zeros_like(b1), mw2 = zeros_like(w2), mb2 = zeros_like(b2);
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  auto adam = [&](auto& param, const Eigen::MatrixXd& grad, Moments& mom, int t) {
    mom.m = beta1 * mom.m + (1 - beta1) * grad;
    mom.v = beta2 * mom.v + (1 - beta2) * grad.cwiseProduct(grad);
    const double c1 = 1 - std::pow(beta1, t), c2 = 1 - std::pow(beta2, t);
    param -= (params.learning_rate * (mom.m / c1).array() /
              ((mom.v / c2).array().sqrt() + eps)).matrix();
  };

  const Eigen::MatrixXd y = one_hot(d.train_y, d.n_classes);
  for (int epoch = 1; epoch <= params.epochs; ++epoch) {
    Eigen::MatrixXd pre = d.train_x * w1;
    pre.rowwise() += b1;
    const Eigen::MatrixXd hidden = pre.cwiseMax(0.0);
    Eigen::MatrixXd out = hidden * w2;
    out.rowwise() += b2;
    softmax_rows(out);
    const Eigen::MatrixXd dout = (out - y) / n;
    const Eigen::MatrixXd gw2 = hidden.transpose() * dout;
    const Eigen::MatrixXd gb2 = dout.colwise().sum();
    const Eigen::MatrixXd dhidden =
        (dout * w2.transpose()).cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
    const Eigen::MatrixXd gw1 = d.train_x.transpose() * dhidden;
    const Eigen::MatrixXd gb1 = dhidden.colwise().sum();
    adam(w1, gw1, mw1, epoch);
    adam(b1, gb1, mb1, epoch);
    adam(w2, gw2, mw2, epoch);
    adam(b2, gb2, mb2, epoch);
  }
  Eigen::MatrixXd pre = d.test_x * w1;
  pre.rowwise() += b1;
  Eigen::MatrixXd out = pre.cwiseMax(0.0) * w2;
  out.rowwise() += b2;
  softmax_rows(out);
  return out;
}

}  // namespace

ClassProbMatrix ClassProbMatrix::from_raw(Eigen::MatrixXd raw) {
  const auto classes = raw.cols();
  if (classes < 1) throw InvalidArgument("class probabilities need at least one class");
  if (kProbClip * static_cast<double>(classes) >= 1.0)
    throw InvalidArgument("too many classes for the probability clip");
  for (Eigen::Index r = 0; r < raw.rows(); ++r) {
    auto row = raw.row(r);
    if (!row.allFinite() || (row.array() < 0.0).any())
      throw InvalidArgument("class probabilities must be finite and non-negative");
    const double s = row.sum();
    if (s > 0.0)
      row /= s;
    else
      row.setConstant(1.0 / static_cast<double>(classes));
    row = (kProbClip + (1.0 - kProbClip * static_cast<double>(classes)) * row.array()).matrix();
  }
  ClassProbMatrix m;
  m.probs_ = std::move(raw);
  return m;
}

ClassProbMatrix ClassProbMatrix::from_clipped(Eigen::MatrixXd probs) {
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    auto row = probs.row(r);
    const bool ok = row.allFinite() && std::abs(row.sum() - 1.0) <= 1e-12 &&
                    row.minCoeff() >= kProbClip * (1.0 - 1e-9);
    if (!ok) row = from_raw(Eigen::MatrixXd(row)).probs();
  }
  ClassProbMatrix m;
  m.probs_ = std::move(probs);
  return m;
}

ClassProbMatrix ClassProbMatrix::uniform(int rows, int classes) {
  return from_raw(Eigen::MatrixXd::Ones(rows, classes));
}

double cross_entropy(const ClassProbMatrix& probs, std::span<const int> labels) {
  if (static_cast<int>(labels.size()) != probs.rows())
    throw InvalidArgument("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                          std::to_string(probs.rows()) + " rows");
  if (labels.empty()) throw InvalidArgument("cross_entropy: no rows");
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= probs.classes()) throw InvalidArgument("cross_entropy: label out of range");
    total -= std::log(probs(static_cast<int>(i), y));
  }
  return total / static_cast<double>(labels.size());
}

PreparedData prepare(const TabularDataset& ds) {
  const auto p = static_cast<Eigen::Index>(ds.cols());
  PreparedData out;
  out.n_classes = ds.n_classes;
  out.train_y = ds.train_labels();
  out.test_y = ds.test_labels();
  out.train_x.resize(static_cast<Eigen::Index>(ds.train_indices.size()), p);
  out.test_x.resize(static_cast<Eigen::Index>(ds.test_indices.size()), p);
  for (Eigen::Index c = 0; c < p; ++c) {
    const bool categorical = ds.feature_kinds[static_cast<std::size_t>(c)].is_categorical();
    double fill = 0.0, scale = 1.0, shift = 0.0;
    if (categorical) {
      std::map<double, int> counts;
      for (int r : ds.train_indices)
        if (!ds.missing(r, c)) ++counts[ds.x(r, c)];
      int best = 0;
      for (const auto& [v, k] : counts)
        if (k > best) {
          best = k;
          fill = v;
        }
    } else {
      double sum = 0.0, sq = 0.0;
      int count = 0;
      for (int r : ds.train_indices)
        if (!ds.missing(r, c)) {
          sum += ds.x(r, c);
          ++count;
        }
      if (count > 0) fill = sum / count;
      for (int r : ds.train_indices)
        if (!ds.missing(r, c)) sq += (ds.x(r, c) - fill) * (ds.x(r, c) - fill);
      const double sd = count > 0 ? std::sqrt(sq / count) : 0.0;
      shift = fill;
      scale = sd > 1e-12 ? 1.0 / sd : 1.0;
    }
    auto value = [&](int r) {
      const double v = ds.missing(r, c) ? fill : ds.x(r, c);
      return (v - shift) * scale;
    };
    for (std::size_t i = 0; i < ds.train_indices.size(); ++i)
      out.train_x(static_cast<Eigen::Index>(i), c) = value(ds.train_indices[i]);
    for (std::size_t i = 0; i < ds.test_indices.size(); ++i)
      out.test_x(static_cast<Eigen::Index>(i), c) = value(ds.test_indices[i]);
  }
  return out;
}

std::string LearnerKind::name() const {
  return std::visit(Overloaded{
                        [](const LogisticRegressionParams&) { return std::string("logistic_regression"); },
                        [](const RandomForestParams&) { return std::string("random_forest"); },
                        [](const BoostedStumpsParams&) { return std::string("boosted_stumps"); },
                        [](const KnnParams&) { return std::string("knn"); },
                        [](const MlpParams&) { return std::string("mlp"); },
                        [](const FrozenExternal& f) { return f.name; },
                    },
                    params);
}

void LearnerKind::validate() const {
  std::visit(Overloaded{
                 [](const LogisticRegressionParams& p) {
                   if (p.iterations < 1 || !(p.learning_rate > 0) || p.l2 < 0)
                     throw InvalidArgument("logistic_regression: bad hyperparameters");
                 },
                 [](const RandomForestParams& p) {
                   if (p.trees < 1 || p.max_depth < 1 || p.min_samples_split < 2)
                     throw InvalidArgument("random_forest: bad hyperparameters");
                 },
                 [](const BoostedStumpsParams& p) {
                   if (p.rounds < 1 || !(p.learning_rate > 0) || p.depth < 1)
                     throw InvalidArgument("boosted_stumps: bad hyperparameters");
                 },
                 [](const KnnParams& p) {
                   if (p.k < 1) throw InvalidArgument("knn: k must be >= 1");
                 },
                 [](const MlpParams& p) {
                   if (p.hidden < 1 || p.epochs < 1 || !(p.learning_rate > 0))
                     throw InvalidArgument("mlp: bad hyperparameters");
                 },
                 [](const FrozenExternal& f) {
                   if (!f.model) throw InvalidArgument("frozen_external: no model attached");
                 },
             },
             params);
}

LearnerKind LearnerKind::frozen(std::shared_ptr<const Predictor> model, std::string name) {
  return {FrozenExternal{std::move(model), std::move(name)}};
}

LearnerKind LearnerKind::from_name(const std::string& name) {
  if (name == "logistic_regression" || name == "logreg") return logistic_regression();
  if (name == "random_forest" || name == "rf") return random_forest();
  if (name == "boosted_stumps") return boosted_stumps();
  if (name == "knn") return knn();
  if (name == "mlp") return mlp();
  throw InvalidArgument("unknown learner '" + name + "'");
}

std::vector<LearnerKind> default_baselines() {
  return {LearnerKind::logistic_regression(), LearnerKind::random_forest(),
          LearnerKind::boosted_stumps(), LearnerKind::knn(), LearnerKind::mlp()};
}

std::vector<LearnerKind> parse_baselines(const std::string& comma_separated) {
  std::vector<LearnerKind> out;
  std::stringstream ss(comma_separated);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(LearnerKind::from_name(item));
  if (out.empty()) throw InvalidArgument("baseline list is empty");
  return out;
}

ClassProbMatrix fit_predict(const LearnerKind& kind, const TabularDataset& data,
                            std::uint64_t seed) {
  kind.validate();
  if (const auto* ext = std::get_if<FrozenExternal>(&kind.params)) return ext->model->predict(data);

  const PreparedData d = prepare(data);
  const auto test_rows = static_cast<int>(d.test_x.rows());
  std::vector<int> train_classes = d.train_y;
  std::sort(train_classes.begin(), train_classes.end());
  train_classes.erase(std::unique(train_classes.begin(), train_classes.end()), train_classes.end());
  if (train_classes.size() == 1) {
    Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(test_rows, d.n_classes);
    raw.col(train_classes.front()).setOnes();
    return ClassProbMatrix::from_raw(std::move(raw));
  }

  Rng rng(seed);
  Eigen::MatrixXd raw = std::visit(
      Overloaded{
          [&](const LogisticRegressionParams& p) { return logistic_regression(p, d); },
          [&](const RandomForestParams& p) { return random_forest(p, d, rng); },
          [&](const BoostedStumpsParams& p) { return boosted_stumps(p, d); },
          [&](const KnnParams& p) { return knn(p, d); },
          [&](const MlpParams& p) { return mlp(p, d, rng); },
          [&](const FrozenExternal&) -> Eigen::MatrixXd { return {}; },
      },
      kind.params);
  return ClassProbMatrix::from_raw(std::move(raw));
}

std::string LearnerPredictor::fingerprint() const {
  return sha256_hex(kind_.name() + ":" + std::to_string(seed_));
}

ClassProbMatrix FrequencyPredictor::predict(const TabularDataset& data) const {
  Eigen::RowVectorXd freq = Eigen::RowVectorXd::Zero(data.n_classes);
  for (int r : data.train_indices) freq[data.y[static_cast<std::size_t>(r)]] += 1.0;
  freq /= static_cast<double>(data.train_indices.size());
  Eigen::MatrixXd raw = freq.replicate(static_cast<Eigen::Index>(data.test_indices.size()), 1);
  return ClassProbMatrix::from_raw(std::move(raw));
}

}  // namespace rtfm
