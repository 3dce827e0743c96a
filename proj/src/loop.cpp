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

#include "rtfm/loop.hpp"

#include <chrono>
#include <cmath>
#include <set>
#include <stdexcept>

#include "rtfm/dataset.hpp"
#include "rtfm/scm_generator.hpp"
#include "rtfm/store.hpp"

namespace rtfm {

namespace fs = std::filesystem;
using nlohmann::json;

void LoopConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw InvalidArgument(std::string("config: ") + name + " must be >= 1");
  };
  if (n_epochs < 0) throw InvalidArgument("config: n_epochs must be >= 0");
  positive(n_iter, "n_iter");
  positive(batch_size, "batch_size");
  positive(n_trials, "n_trials");
  positive(n_ds, "n_ds");
  positive(n_train, "n_train");
  positive(n_test, "n_test");
  if (add_original_baseline_after_epoch < 0)
    throw InvalidArgument("config: add_original_baseline_after_epoch must be >= 0");
  if (!(c_frac > 0.0 && c_frac < 1.0)) throw InvalidArgument("config: c_frac must lie in (0,1)");
  if (lr && !(*lr > 0.0 && std::isfinite(*lr))) throw InvalidArgument("config: lr must be positive");
  if (baselines.empty()) throw InvalidArgument("config: baselines must not be empty");
  for (const auto& b : baselines) {
    try {
      LearnerKind::from_name(b);
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(std::string("config: baselines: ") + e.what());
    }
  }
  if (strategy != "tpe" && strategy != "random")
    throw InvalidArgument("config: strategy must be 'tpe' or 'random'");
}

SearchStrategy LoopConfig::search_strategy() const {
  return strategy == "random" ? SearchStrategy::random() : SearchStrategy::tpe();
}

json LoopConfig::to_json() const {
  json j{{"n_epochs", n_epochs},
         {"n_iter", n_iter},
         {"batch_size", batch_size},
         {"lr", lr ? json(*lr) : json(nullptr)},
         {"n_trials", n_trials},
         {"n_ds", n_ds},
         {"c_frac", c_frac},
         {"n_train", n_train},
         {"n_test", n_test},
         {"add_original_baseline_after_epoch", add_original_baseline_after_epoch},
         {"seed", seed},
         {"baselines", baselines},
         {"strategy", strategy}};
  return j;
}

LoopConfig LoopConfig::from_json(const json& j) {
  if (!j.is_object()) throw InvalidArgument("config: expected a JSON object");
  static const std::set<std::string> known = {
      "n_epochs", "n_iter", "batch_size", "lr", "n_trials", "n_ds", "c_frac", "n_train",
      "n_test", "add_original_baseline_after_epoch", "seed", "baselines", "strategy", "workers"};
  LoopConfig c;
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw InvalidArgument("config: unknown field '" + key + "'");
    try {
      if (key == "n_epochs") c.n_epochs = value.get<int>();
      else if (key == "n_iter") c.n_iter = value.get<int>();
      else if (key == "batch_size") c.batch_size = value.get<int>();
      else if (key == "lr") c.lr = value.is_null() ? std::nullopt : std::optional<double>(value.get<double>());
      else if (key == "n_trials") c.n_trials = value.get<int>();
      else if (key == "n_ds") c.n_ds = value.get<int>();
      else if (key == "c_frac") c.c_frac = value.get<double>();
      else if (key == "n_train") c.n_train = value.get<int>();
      else if (key == "n_test") c.n_test = value.get<int>();
      else if (key == "add_original_baseline_after_epoch") c.add_original_baseline_after_epoch = value.get<int>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "baselines") c.baselines = value.get<std::vector<std::string>>();
      else if (key == "strategy") c.strategy = value.get<std::string>();
      else if (key == "workers") c.workers = value.get<std::size_t>();
    } catch (const json::exception&) {
      throw InvalidArgument("config: field '" + key + "' has the wrong type");
    }
  }
  c.validate();
  return c;
}

json EpochReport::to_json() const {
  return {{"epoch", epoch},
          {"max_gap", max_gap},
          {"weighted_objective", weighted_objective},
          {"eta", eta},
          {"entropy", entropy},
          {"h_min", h_min},
          {"n_surviving", n_surviving},
          {"original_baseline", original_baseline},
          {"mean_train_loss", mean_train_loss},
          {"wall_seconds", wall_seconds}};
}

EpochReport EpochReport::from_json(const json& j) {
  EpochReport r;
  r.epoch = j.at("epoch").get<int>();
  r.max_gap = j.at("max_gap").get<double>();
  r.weighted_objective = j.at("weighted_objective").get<double>();
  r.eta = j.at("eta").get<double>();
  r.entropy = j.at("entropy").get<double>();
  r.h_min = j.at("h_min").get<double>();
  r.n_surviving = j.at("n_surviving").get<int>();
  r.original_baseline = j.at("original_baseline").get<bool>();
  r.mean_train_loss = j.at("mean_train_loss").get<double>();
  r.wall_seconds = j.at("wall_seconds").get<double>();
  return r;
}

std::vector<std::size_t> sample_theta_indices(const DroWeights& q, std::size_t n, Rng& rng) {
  if (q.weights.empty()) throw InvalidArgument("sampling from empty weights");
  std::vector<std::size_t> out(n);
  for (auto& v : out) v = rng.categorical(q.weights);
  return out;
}

std::vector<TabularDataset> sample_training_batch(const DroWeights& q, const LoopConfig& config,
                                                  Rng& rng) {
  const auto n = static_cast<std::size_t>(config.batch_size);
  const std::vector<std::size_t> picks = sample_theta_indices(q, n, rng);
  std::vector<std::uint64_t> seeds(n);
  for (auto& s : seeds) s = rng();

  std::vector<TabularDataset> batch(n);
  parallel_for(n, config.workers, [&](std::size_t i) {
    Rng local(seeds[i]);
    std::size_t pick = picks[i];
    for (int attempt = 0;; ++attempt) {
      try {
        batch[i] = generate_dataset(q.thetas[pick], local(), config.n_train, config.n_test);
        return;
      } catch (const Error& e) {
        if (attempt + 1 >= kMaxBatchRedraws)
          throw Error("degenerate-generator", std::string("training batch: ") + e.what());
        pick = local.categorical(q.weights);
      }
    }
  });
  return batch;
}

DroWeights weights_from_log(const TrialLog& log, double c_frac) {
  std::vector<ThetaParams> thetas;
  std::vector<double> gaps;
  for (const Trial* t : log.surviving()) {
    thetas.push_back(t->theta);
    gaps.push_back(t->gap);
  }
  if (gaps.empty()) throw Error("no-surviving-trials", "every trial of the parameter search failed");
  return build_dro_weights(std::move(thetas), std::move(gaps), c_frac);
}

EpochReport summarize_epoch(int epoch, const TrialLog& log, const DroWeights& q) {
  EpochReport r;
  r.epoch = epoch;
  r.max_gap = log.max_gap();
  r.weighted_objective = q.weighted_objective();
  r.eta = q.eta;
  r.entropy = q.entropy;
  r.h_min = q.h_min;
  r.n_surviving = static_cast<int>(q.gaps.size());
  return r;
}

std::string trial_log_name(int epoch) { return "trials-epoch-" + std::to_string(epoch) + ".jsonl"; }
std::string snapshot_name(int epoch) { return "snapshots/epoch-" + std::to_string(epoch) + ".json"; }

std::vector<EpochReport> load_reports(const fs::path& run_dir) {
  std::vector<EpochReport> out;
  const fs::path p = run_dir / kEpochsFile;
  if (!fs::exists(p)) return out;
  const std::string text = read_text_file(p);
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    if (end > start) out.push_back(EpochReport::from_json(json::parse(text.substr(start, end - start))));
    start = end + 1;
  }
  return out;
}

namespace {

class RunStore {
 public:
  RunStore(const LoopConfig& config, std::optional<fs::path> dir) : dir_(std::move(dir)) {
    manifest_.root_seed = config.seed;
    manifest_.config = config.to_json();
  }
  bool active() const { return dir_.has_value(); }
  const fs::path& dir() const { return *dir_; }
  RunManifest& manifest() { return manifest_; }

  void write(const std::string& rel, const std::string& text) {
    if (dir_) write_text_file(*dir_ / rel, text);
  }
  void write_reports(const std::vector<EpochReport>& reports) {
    std::string text;
    for (const auto& r : reports) text += canonical_dump(r.to_json()) + "\n";
    write(kEpochsFile, text);
  }
  void finish_epoch(int epoch) {
    if (!dir_) return;
    write(kStateFile, canonical_dump(json{{"completed_epoch", epoch}}) + "\n");
    manifest_.write(*dir_);
  }

 private:
  std::optional<fs::path> dir_;
  RunManifest manifest_;
};

}  // namespace

LoopResult run_rtfm(const LoopConfig& config, TrainablePredictor& model, const LoopOptions& options) {
  config.validate();
  LoopResult result;
  if (config.n_epochs == 0) return result;

  std::vector<LearnerKind> baselines;
  for (const auto& name : config.baselines) baselines.push_back(LearnerKind::from_name(name));
  const GapConfig gap_cfg = config.gap_config();
  const SearchStrategy strategy = config.search_strategy();
  const double lr = config.resolved_lr(options.toy);

  RunStore store(config, options.run_dir);
  std::shared_ptr<const Predictor> original;
  int start_epoch = 0;
  DroWeights q;

  auto search = [&](int epoch) {
    std::vector<LearnerKind> set = baselines;
    const bool with_original = epoch >= config.add_original_baseline_after_epoch;
    if (with_original) set.push_back(LearnerKind::frozen(original, "original_model"));
    const std::string before = model.fingerprint();
    TrialLog log = parameter_search(model, set, config.n_trials, gap_cfg, strategy,
                                    store.manifest().seed_for("search", static_cast<std::uint64_t>(epoch), true));
    if (model.fingerprint() != before)
      throw std::logic_error("model state changed during parameter search");
    return std::make_pair(std::move(log), with_original);
  };

  if (options.resume) {
    if (!store.active()) throw InvalidArgument("resume needs a run directory");
    const json state = read_json_file(store.dir() / kStateFile);
    const int done = state.at("completed_epoch").get<int>();
    model.restore(read_json_file(store.dir() / snapshot_name(0)));
    original = model.freeze();
    model.restore(read_json_file(store.dir() / snapshot_name(done)));
    for (int e = 0; e <= done; ++e)
      result.trial_logs.push_back(TrialLog::load(store.dir() / trial_log_name(e)));
    result.reports = load_reports(store.dir());
    result.reports.resize(static_cast<std::size_t>(done) + 1);
    q = weights_from_log(result.trial_logs.back(), config.c_frac);
    for (int e = 0; e <= done; ++e) store.manifest().seed_for("search", static_cast<std::uint64_t>(e), true);
    for (int e = 1; e <= done; ++e) store.manifest().seed_for("train", static_cast<std::uint64_t>(e), true);
    start_epoch = done + 1;
  } else {
    original = model.freeze();
    if (store.active()) {
      fs::create_directories(store.dir());
      store.write(kConfigFile, canonical_dump(config.to_json()) + "\n");
      store.write(snapshot_name(0), canonical_dump(model.save()) + "\n");
    }
    const auto t0 = std::chrono::steady_clock::now();
    auto [log, with_original] = search(0);
    q = weights_from_log(log, config.c_frac);
    EpochReport report = summarize_epoch(0, log, q);
    report.original_baseline = with_original;
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    store.write(trial_log_name(0), log.to_jsonl());
    result.trial_logs.push_back(std::move(log));
    result.reports.push_back(report);
    store.write_reports(result.reports);
    store.finish_epoch(0);
    if (options.on_epoch) options.on_epoch(report);
    start_epoch = 1;
  }

  for (int epoch = start_epoch; epoch <= config.n_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(store.manifest().seed_for("train", static_cast<std::uint64_t>(epoch), true));
    double loss_sum = 0.0;
    for (int it = 0; it < config.n_iter; ++it) {
      const std::vector<TabularDataset> batch = sample_training_batch(q, config, rng);
      loss_sum += model.train_step(batch, lr);
    }
    store.write(snapshot_name(epoch), canonical_dump(model.save()) + "\n");

    auto [log, with_original] = search(epoch);
    q = weights_from_log(log, config.c_frac);
    EpochReport report = summarize_epoch(epoch, log, q);
    report.original_baseline = with_original;
    report.mean_train_loss = loss_sum / config.n_iter;
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    store.write(trial_log_name(epoch), log.to_jsonl());
    result.trial_logs.push_back(std::move(log));
    result.reports.push_back(report);
    store.write_reports(result.reports);
    store.finish_epoch(epoch);
    if (options.on_epoch) options.on_epoch(report);
  }
  return result;
}

}  // namespace rtfm
