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
#include <span>

#include "rtfm/predictor.hpp"

namespace rtfm {

// Log-domain parameters of the kernel classifier.
struct ToyWeights {
  double log_bandwidth = 0.0;    // beta
  double log_smoothing = 0.0;    // s
  double log_temperature = 0.0;  // tau

  std::array<double, 3> as_array() const { return {log_bandwidth, log_smoothing, log_temperature}; }
  static ToyWeights from_array(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }
  friend bool operator==(const ToyWeights&, const ToyWeights&) = default;
};

using ToyGradient = std::array<double, 3>;

// p(c|x) = softmax_c(e^tau * log(e^s + sum_{j in train, y_j = c} exp(-e^beta * |x - x_j|^2 / p)))
ClassProbMatrix toy_predict(const ToyWeights& w, const TabularDataset& data);

struct LossAndGrad {
  double loss = 0.0;
  ToyGradient grad{};
};

// Mean test cross entropy over the batch and its exact gradient in
// (beta, s, tau). Uses unclipped log-probabilities so the gradient is exact.
LossAndGrad toy_loss_and_grad(const ToyWeights& w, std::span<const TabularDataset> batch,
                              std::size_t workers = 1);

ToyWeights sgd_step(const ToyWeights& w, const ToyGradient& grad, double lr);

nlohmann::json toy_checkpoint(const ToyWeights& w, long step);
ToyWeights toy_from_checkpoint(const nlohmann::json& j, long* step = nullptr);

class ToyModel final : public TrainablePredictor {
 public:
  explicit ToyModel(ToyWeights w = {}, std::size_t workers = 1) : w_(w), workers_(workers) {}

  ClassProbMatrix predict(const TabularDataset& data) const override { return toy_predict(w_, data); }
  std::string describe() const override { return "toy"; }
  std::string fingerprint() const override;

  double train_step(std::span<const TabularDataset> batch, double lr) override;
  std::shared_ptr<const Predictor> freeze() const override {
    return std::make_shared<ToyModel>(w_, workers_);
  }
  nlohmann::json save() const override { return toy_checkpoint(w_, step_); }
  void restore(const nlohmann::json& state) override { w_ = toy_from_checkpoint(state, &step_); }

  const ToyWeights& weights() const noexcept { return w_; }
  long step() const noexcept { return step_; }

 private:
  ToyWeights w_;
  std::size_t workers_;
  long step_ = 0;
};

}  // namespace rtfm
