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

#include "rtfm/toy_model.hpp"

#include <cmath>
#include <vector>

#include "rtfm/common.hpp"

namespace rtfm {

namespace {

// Per-class kernel mass and its beta-derivative for every test row.
struct KernelSums {
  Eigen::MatrixXd mass;       // sum_j K_j over train rows of class c
  Eigen::MatrixXd dmass_db;   // d mass / d beta
};

KernelSums kernel_sums(const ToyWeights& w, const PreparedData& d, bool with_derivative) {
  const Eigen::Index t = d.test_x.rows(), n = d.train_x.rows();
  const double p = std::max<double>(1.0, static_cast<double>(d.train_x.cols()));
  const double a = std::exp(w.log_bandwidth);
  KernelSums out{Eigen::MatrixXd::Zero(t, d.n_classes), Eigen::MatrixXd()};
  if (with_derivative) out.dmass_db = Eigen::MatrixXd::Zero(t, d.n_classes);
  // Squared distances via |x|^2 + |y|^2 - 2 x.y, clamped at zero.
  const Eigen::VectorXd test_sq = d.test_x.rowwise().squaredNorm();
  const Eigen::VectorXd train_sq = d.train_x.rowwise().squaredNorm();
  Eigen::MatrixXd dist = -2.0 * d.test_x * d.train_x.transpose();
  dist.colwise() += test_sq;
  dist.rowwise() += train_sq.transpose();
  for (Eigen::Index i = 0; i < t; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double scaled = std::max(0.0, dist(i, j)) / p;
      const double k = std::exp(-a * scaled);
      const int c = d.train_y[static_cast<std::size_t>(j)];
      out.mass(i, c) += k;
      if (with_derivative) out.dmass_db(i, c) -= k * a * scaled;
    }
  return out;
}

struct DatasetTerms {
  double loss = 0.0;
  ToyGradient grad{};
};

DatasetTerms dataset_terms(const ToyWeights& w, const TabularDataset& ds) {
  const PreparedData d = prepare(ds);
  const KernelSums ks = kernel_sums(w, d, true);
  const double sigma = std::exp(w.log_smoothing);
  const double temp = std::exp(w.log_temperature);
  const Eigen::Index t = d.test_x.rows();
  DatasetTerms out;
  Eigen::VectorXd logits(d.n_classes), probs(d.n_classes);
  for (Eigen::Index i = 0; i < t; ++i) {
    for (int c = 0; c < d.n_classes; ++c) logits[c] = temp * std::log(sigma + ks.mass(i, c));
    const double mx = logits.maxCoeff();
    probs = (logits.array() - mx).exp();
    const double z = probs.sum();
    probs /= z;
    const int y = d.test_y[static_cast<std::size_t>(i)];
    out.loss += -(logits[y] - mx - std::log(z));
    for (int c = 0; c < d.n_classes; ++c) {
      const double dl = probs[c] - (c == y ? 1.0 : 0.0);
      const double score = sigma + ks.mass(i, c);
      out.grad[0] += dl * temp * ks.dmass_db(i, c) / score;
      out.grad[1] += dl * temp * sigma / score;
      out.grad[2] += dl * temp * std::log(score);
    }
  }
  const double inv = 1.0 / static_cast<double>(t);
  out.loss *= inv;
  for (double& g : out.grad) g *= inv;
  return out;
}

}  // namespace

ClassProbMatrix toy_predict(const ToyWeights& w, const TabularDataset& data) {
  const PreparedData d = prepare(data);
  const KernelSums ks = kernel_sums(w, d, false);
  const double sigma = std::exp(w.log_smoothing);
  const double temp = std::exp(w.log_temperature);
  Eigen::MatrixXd logits = (temp * (ks.mass.array() + sigma).log()).matrix();
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
  }
  return ClassProbMatrix::from_raw(std::move(logits));
}

LossAndGrad toy_loss_and_grad(const ToyWeights& w, std::span<const TabularDataset> batch,
                              std::size_t workers) {
  if (batch.empty()) throw InvalidArgument("toy_loss_and_grad: empty batch");
  std::vector<DatasetTerms> terms(batch.size());
  parallel_for(batch.size(), workers, [&](std::size_t i) { terms[i] = dataset_terms(w, batch[i]); });
  LossAndGrad out;
  for (const auto& t : terms) {  // fixed index order
    out.loss += t.loss;
    for (int k = 0; k < 3; ++k) out.grad[static_cast<std::size_t>(k)] += t.grad[static_cast<std::size_t>(k)];
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.loss *= inv;
  for (double& g : out.grad) g *= inv;
  return out;
}

ToyWeights sgd_step(const ToyWeights& w, const ToyGradient& grad, double lr) {
  if (!(lr > 0.0)) throw InvalidArgument("sgd_step: learning rate must be positive");
  return {w.log_bandwidth - lr * grad[0], w.log_smoothing - lr * grad[1],
          w.log_temperature - lr * grad[2]};
}

nlohmann::json toy_checkpoint(const ToyWeights& w, long step) {
  return {{"beta", w.log_bandwidth}, {"s", w.log_smoothing}, {"tau", w.log_temperature},
          {"step", step}};
}

ToyWeights toy_from_checkpoint(const nlohmann::json& j, long* step) {
  try {
    ToyWeights w{j.at("beta").get<double>(), j.at("s").get<double>(), j.at("tau").get<double>()};
    if (!std::isfinite(w.log_bandwidth) || !std::isfinite(w.log_smoothing) ||
        !std::isfinite(w.log_temperature))
      throw InvalidArgument("toy checkpoint: non-finite weight");
    if (step) *step = j.value("step", 0L);
    return w;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("toy checkpoint: ") + e.what());
  }
}

std::string ToyModel::fingerprint() const {
  const auto a = w_.as_array();
  return sha256_hex(std::string_view(reinterpret_cast<const char*>(a.data()), sizeof(a)));
}

double ToyModel::train_step(std::span<const TabularDataset> batch, double lr) {
  const LossAndGrad lg = toy_loss_and_grad(w_, batch, workers_);
  w_ = sgd_step(w_, lg.grad, lr);
  ++step_;
  return lg.loss;
}

}  // namespace rtfm
