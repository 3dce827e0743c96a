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

#include <memory>
#include <span>
#include <string>

#include "rtfm/dataset.hpp"
#include "rtfm/learners.hpp"

namespace rtfm {

// The in-context model under training (or any frozen stand-in for it).
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual ClassProbMatrix predict(const TabularDataset& data) const = 0;
  virtual std::string describe() const = 0;
  // Hash of the state that determines predictions.
  virtual std::string fingerprint() const = 0;
};

// A predictor the training loop may update.
class TrainablePredictor : public Predictor {
 public:
  // One update on the batch; returns the batch loss before the update.
  virtual double train_step(std::span<const TabularDataset> batch, double lr) = 0;
  // A predictor frozen at the current state.
  virtual std::shared_ptr<const Predictor> freeze() const = 0;
  // Persisted state for run directories; restore() accepts what save() wrote.
  virtual nlohmann::json save() const = 0;
  virtual void restore(const nlohmann::json& state) = 0;
};

// A baseline learner served through the Predictor interface.
class LearnerPredictor final : public Predictor {
 public:
  LearnerPredictor(LearnerKind kind, std::uint64_t seed) : kind_(std::move(kind)), seed_(seed) {}
  ClassProbMatrix predict(const TabularDataset& data) const override {
    return fit_predict(kind_, data, seed_);
  }
  std::string describe() const override { return "learner:" + kind_.name(); }
  std::string fingerprint() const override;

 private:
  LearnerKind kind_;
  std::uint64_t seed_;
};

// Predicts the train-split label frequencies for every test row.
class FrequencyPredictor final : public Predictor {
 public:
  ClassProbMatrix predict(const TabularDataset& data) const override;
  std::string describe() const override { return "frequency"; }
  std::string fingerprint() const override { return "frequency"; }
};

}  // namespace rtfm
