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

#include "rtfm/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "rtfm/dataset.hpp"

namespace rtfm {

using nlohmann::json;

std::vector<const Trial*> TrialLog::surviving() const {
  std::vector<const Trial*> out;
  for (const auto& t : trials)
    if (!t.failed) out.push_back(&t);
  return out;
}

double TrialLog::max_gap() const {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto* t : surviving()) best = std::max(best, t->gap);
  return best;
}

std::string TrialLog::to_jsonl() const {
  std::string out;
  for (const auto& t : trials) {
    json per = json::array();
    for (double g : t.per_dataset_gaps) {
      if (std::isfinite(g))
        per.push_back(g);
      else
        per.push_back(nullptr);
    }
    json line{{"trial", t.index},
              {"theta", to_json(t.theta)},
              {"gap", t.failed ? json(nullptr) : json(t.gap)},
              {"per_dataset_gaps", std::move(per)},
              {"failed", t.failed}};
    if (t.failed && !t.failure.empty()) line["failure"] = t.failure;
    out += canonical_dump(line);
    out.push_back('\n');
  }
  return out;
}

TrialLog TrialLog::from_jsonl(const std::string& text) {
  TrialLog log;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      Trial t;
      t.index = j.at("trial").get<int>();
      t.theta = theta_from_json(j.at("theta"));
      t.failed = j.at("failed").get<bool>();
      t.gap = t.failed ? std::numeric_limits<double>::quiet_NaN() : j.at("gap").get<double>();
      for (const auto& g : j.at("per_dataset_gaps"))
        t.per_dataset_gaps.push_back(g.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                 : g.get<double>());
      t.failure = j.value("failure", std::string());
      log.trials.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw InvalidArgument(std::string("trial log: ") + e.what());
    }
  }
  return log;
}

void TrialLog::save(const std::filesystem::path& path) const {
  std::ofstream(path, std::ios::binary) << to_jsonl();
}

TrialLog TrialLog::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_jsonl(buf.str());
}

void SearchStrategy::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("tpe gamma must lie in (0,1)");
  if (n_candidates < 1) throw InvalidArgument("tpe n_candidates must be >= 1");
  if (!(prior_weight > 0.0)) throw InvalidArgument("tpe prior_weight must be positive");
}

ThetaParams random_theta(Rng& rng) {
  ThetaIndices idx{};
  for (std::size_t d = 0; d < kThetaDims; ++d)
    idx[d] = static_cast<int>(rng.index(static_cast<std::size_t>(kThetaDimSizes[d])));
  return from_indices(idx);
}

ThetaParams suggest(const TrialLog& history, const SearchStrategy& strategy, Rng& rng) {
  strategy.validate();
  std::vector<const Trial*> ok = history.surviving();
  if (strategy.kind == StrategyKind::kRandom ||
      static_cast<int>(history.size()) < std::max(strategy.n_startup, 1) || ok.empty())
    return random_theta(rng);

  std::stable_sort(ok.begin(), ok.end(), [](const Trial* a, const Trial* b) { return a->gap > b->gap; });
  const auto n_good = static_cast<std::size_t>(
      std::max(1.0, std::ceil(strategy.gamma * static_cast<double>(ok.size()))));

  // Per-dimension smoothed frequencies for the good and bad groups.
  std::array<std::vector<double>, kThetaDims> good, bad;
  for (std::size_t d = 0; d < kThetaDims; ++d) {
    good[d].assign(static_cast<std::size_t>(kThetaDimSizes[d]), strategy.prior_weight);
    bad[d].assign(static_cast<std::size_t>(kThetaDimSizes[d]), strategy.prior_weight);
  }
  auto count = [](std::array<std::vector<double>, kThetaDims>& model, const ThetaParams& t) {
    const ThetaIndices idx = to_indices(t);
    for (std::size_t d = 0; d < kThetaDims; ++d) model[d][static_cast<std::size_t>(idx[d])] += 1.0;
  };
  for (std::size_t i = 0; i < ok.size(); ++i) count(i < n_good ? good : bad, ok[i]->theta);
  for (const auto& t : history.trials)
    if (t.failed) count(bad, t.theta);
  for (std::size_t d = 0; d < kThetaDims; ++d) {
    const double gs = std::accumulate(good[d].begin(), good[d].end(), 0.0);
    const double bs = std::accumulate(bad[d].begin(), bad[d].end(), 0.0);
    for (auto& v : good[d]) v /= gs;
    for (auto& v : bad[d]) v /= bs;
  }

  ThetaIndices best{};
  double best_score = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < strategy.n_candidates; ++c) {
    ThetaIndices cand{};
    double score = 0.0;
    for (std::size_t d = 0; d < kThetaDims; ++d) {
      const std::size_t v = rng.categorical(good[d]);
      cand[d] = static_cast<int>(v);
      score += std::log(good[d][v]) - std::log(bad[d][v]);
    }
    if (score > best_score) {
      best_score = score;
      best = cand;
    }
  }
  return from_indices(best);
}

TrialLog run_search(const TrialObjective& objective, int n_trials, const SearchStrategy& strategy,
                    std::uint64_t seed) {
  if (n_trials < 1) throw InvalidArgument("search: n_trials must be >= 1");
  strategy.validate();
  Rng rng(derive_seed(seed, "suggest"));
  TrialLog log;
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < n_trials; ++i) {
    Trial t;
    t.index = i;
    t.theta = suggest(log, strategy, rng);
    TrialOutcome outcome = objective(t.theta, derive_seed(seed, "trial", static_cast<std::uint64_t>(i)));
    t.gap = outcome.failed ? std::numeric_limits<double>::quiet_NaN() : outcome.gap;
    t.per_dataset_gaps = std::move(outcome.per_dataset_gaps);
    t.failed = outcome.failed;
    t.failure = std::move(outcome.failure);
    t.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log.trials.push_back(std::move(t));
  }
  return log;
}

TrialLog parameter_search(const Predictor& model, std::span<const LearnerKind> baselines,
                          int n_trials, const GapConfig& config, const SearchStrategy& strategy,
                          std::uint64_t seed) {
  if (config.n_ds < 1) throw InvalidArgument("search: n_ds must be >= 1");
  const int needed = std::max(1, config.n_ds / 2);
  const auto objective = [&](const ThetaParams& theta, std::uint64_t trial_seed) {
    TrialOutcome out;
    out.per_dataset_gaps.assign(static_cast<std::size_t>(config.n_ds),
                                std::numeric_limits<double>::quiet_NaN());
    try {
      const GapEstimate est = estimate_gap(model, baselines, theta, config, trial_seed);
      const std::vector<double> gaps = est.per_dataset_gaps();
      for (std::size_t i = 0; i < gaps.size(); ++i)
        out.per_dataset_gaps[static_cast<std::size_t>(est.dataset_indices[i])] = gaps[i];
      out.gap = est.gap;
      if (est.n_effective < needed) {
        out.failed = true;
        out.failure = "too-few-datasets";
      }
    } catch (const Error& e) {
      out.failed = true;
      out.failure = e.code();
    }
    return out;
  };
  return run_search(objective, n_trials, strategy, seed);
}

}  // namespace rtfm
