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

#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "rtfm/bridge.hpp"
#include "rtfm/dataset.hpp"
#include "rtfm/dro.hpp"
#include "rtfm/loop.hpp"
#include "rtfm/metrics.hpp"
#include "rtfm/scm_generator.hpp"
#include "rtfm/search.hpp"
#include "rtfm/store.hpp"
#include "rtfm/toy_model.hpp"

namespace rtfm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::size_t workers = 0;
  std::string config_path;
};

struct ModelHandle {
  std::shared_ptr<Predictor> predictor;
  TrainablePredictor* trainable = nullptr;
  bool toy = false;
};

bool is_bridge_address(const std::string& spec) {
  return spec.rfind("bridge:", 0) == 0 || spec.rfind("tcp:", 0) == 0 || spec.rfind("exec:", 0) == 0;
}

// toy | toy:CHECKPOINT | frequency | bridge:HOST:PORT | tcp:HOST:PORT |
// exec:CMD | <baseline learner name>
ModelHandle make_model(const std::string& spec, std::size_t workers, std::uint64_t seed) {
  ModelHandle h;
  if (spec == "toy" || spec.rfind("toy:", 0) == 0) {
    ToyWeights w;
    long step = 0;
    if (spec.size() > 4) w = toy_from_checkpoint(read_json_file(spec.substr(4)), &step);
    auto m = std::make_shared<ToyModel>(w, workers);
    if (step) m->restore(toy_checkpoint(w, step));
    h.trainable = m.get();
    h.predictor = m;
    h.toy = true;
  } else if (spec == "frequency") {
    h.predictor = std::make_shared<FrequencyPredictor>();
  } else if (is_bridge_address(spec)) {
    auto m = std::make_shared<bridge::BridgePredictor>(bridge::Connection::open(spec), spec);
    h.trainable = m.get();
    h.predictor = m;
  } else {
    h.predictor = std::make_shared<LearnerPredictor>(LearnerKind::from_name(spec), seed);
  }
  return h;
}

std::vector<double> parse_doubles(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      throw InvalidArgument("not a number: '" + cell + "'");
    }
    if (used != cell.size()) throw InvalidArgument("not a number: '" + cell + "'");
    out.push_back(v);
  }
  return out;
}

json parse_json_arg(const std::string& arg) {
  const auto first = arg.find_first_not_of(" \t");
  if (first != std::string::npos && arg[first] == '{') {
    try {
      return json::parse(arg);
    } catch (const json::exception& e) {
      throw InvalidArgument(std::string("bad JSON: ") + e.what());
    }
  }
  return read_json_file(arg);
}

LoopConfig load_config(const Globals& g) {
  LoopConfig c = g.config_path.empty() ? LoopConfig{} : LoopConfig::from_json(read_json_file(g.config_path));
  if (g.seed) c.seed = *g.seed;
  c.workers = resolve_workers(g.workers);
  return c;
}

void emit_json(std::ostream& out, const json& j) { out << j.dump(2) << "\n"; }

int cmd_generate(const Globals& g, const std::string& theta_arg, bool random, int count,
                 const std::string& out_dir, int n_train, int n_test, std::ostream& out) {
  if (count < 1) throw InvalidArgument("--count must be >= 1");
  const std::uint64_t root = g.seed.value_or(0);
  std::optional<ThetaParams> fixed;
  if (!theta_arg.empty()) fixed = theta_from_json(parse_json_arg(theta_arg));
  else if (!random) fixed = ThetaParams{};

  RunManifest manifest;
  manifest.root_seed = root;
  manifest.config = {{"count", count}, {"n_train", n_train}, {"n_test", n_test},
                     {"theta", fixed ? to_json(*fixed) : json("random")}};
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  for (int i = 0; i < count; ++i) {
    const std::uint64_t seed = manifest.seed_for("generate", static_cast<std::uint64_t>(i), true);
    TabularDataset ds;
    if (fixed) {
      ds = generate_dataset(*fixed, seed, n_train, n_test);
    } else {
      Rng rng(derive_seed(seed, "theta"));
      for (int attempt = 0;; ++attempt) {
        try {
          ds = generate_dataset(random_theta(rng), rng(), n_train, n_test);
          break;
        } catch (const Error&) {
          if (attempt + 1 >= kMaxScmRebuilds) throw;
        }
      }
    }
    char name[32];
    std::snprintf(name, sizeof name, "dataset-%03d", i);
    write_dataset(ds, dir / (std::string(name) + ".csv"), dir / (std::string(name) + ".json"));
  }
  manifest.write(dir);
  out << "wrote " << count << " datasets to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_search(const Globals& g, LoopConfig c, const std::string& model_spec,
               const std::string& out_path, std::ostream& out, std::ostream& err) {
  c.validate();
  std::vector<LearnerKind> baselines;
  for (const auto& b : c.baselines) baselines.push_back(LearnerKind::from_name(b));
  ModelHandle m = make_model(model_spec, c.workers, c.seed);
  const TrialLog log = parameter_search(*m.predictor, baselines, c.n_trials, c.gap_config(),
                                        c.search_strategy(), derive_seed(c.seed, "search"));
  if (out_path.empty()) {
    out << log.to_jsonl();
  } else {
    write_text_file(out_path, log.to_jsonl());
  }
  const auto surv = log.surviving();
  err << "search: " << surv.size() << "/" << log.size() << " trials succeeded";
  if (!surv.empty()) err << ", max gap " << format_double(log.max_gap());
  err << "\n";
  (void)g;
  return kExitOk;
}

int cmd_dro(const std::string& gaps_arg, const std::string& trials_path, double c, double tol,
            std::ostream& out) {
  if (gaps_arg.empty() == trials_path.empty()) throw InvalidArgument("give exactly one of --gaps or --trials");
  DroWeights q;
  if (!trials_path.empty()) {
    q = weights_from_log(TrialLog::load(trials_path), c);
  } else {
    std::vector<double> gaps = parse_doubles(gaps_arg);
    if (gaps.empty()) throw InvalidArgument("--gaps is empty");
    q = build_dro_weights(std::vector<ThetaParams>(gaps.size()), gaps, c, tol);
  }
  const EtaSolution sol = q.gaps.size() > 1 ? solve_eta_detailed(q.gaps, q.h_min, tol) : EtaSolution{};
  emit_json(out, {{"eta", q.eta},
                  {"weights", q.weights},
                  {"entropy", q.entropy},
                  {"h_min", q.h_min},
                  {"converged", sol.converged},
                  {"weighted_objective", q.weighted_objective()}});
  return kExitOk;
}

int cmd_train(LoopConfig c, const std::string& model_spec, const std::string& out_dir, bool resume,
              std::ostream& out) {
  if (resume) {
    LoopConfig persisted = LoopConfig::from_json(read_json_file(fs::path(out_dir) / kConfigFile));
    persisted.workers = c.workers;
    c = persisted;
  }
  c.validate();
  ModelHandle m = make_model(model_spec, c.workers, c.seed);
  if (!m.trainable) throw InvalidArgument("model '" + model_spec + "' cannot be trained");
  LoopOptions opts;
  opts.run_dir = fs::path(out_dir);
  opts.resume = resume;
  opts.toy = m.toy;
  opts.on_epoch = [&](const EpochReport& r) { out << canonical_dump(r.to_json()) << "\n" << std::flush; };
  run_rtfm(c, *m.trainable, opts);
  return kExitOk;
}

std::vector<std::pair<std::string, fs::path>> list_datasets(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InvalidArgument("not a directory: " + dir.string());
  std::vector<std::pair<std::string, fs::path>> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") {
      fs::path sidecar = e.path();
      sidecar.replace_extension(".json");
      if (fs::exists(sidecar)) out.emplace_back(e.path().stem().string(), e.path());
    }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw InvalidArgument("no dataset CSV + JSON pairs in " + dir.string());
  return out;
}

int cmd_eval(const Globals& g, const std::string& data_dir, const std::string& model_spec,
             const std::string& out_path, std::ostream& out) {
  const auto workers = resolve_workers(g.workers);
  ModelHandle m = make_model(model_spec, workers, derive_seed(g.seed.value_or(0), "eval"));
  std::string csv = "dataset,auc_ovo,cross_entropy\n";
  for (const auto& [name, path] : list_datasets(data_dir)) {
    fs::path sidecar = path;
    sidecar.replace_extension(".json");
    const TabularDataset ds = read_dataset(path, sidecar);
    const ClassProbMatrix p = m.predictor->predict(ds);
    const std::vector<int> labels = ds.test_labels();
    std::string auc_cell;
    try {
      auc_cell = format_double(auc_ovo(p, labels));
    } catch (const Error&) {
      auc_cell = "nan";
    }
    csv += name + "," + auc_cell + "," + format_double(cross_entropy(p, labels)) + "\n";
  }
  if (out_path.empty())
    out << csv;
  else
    write_text_file(out_path, csv);
  return kExitOk;
}

int cmd_report(const std::string& scores_path, const std::string& reference, const std::string& out_path,
               std::ostream& out) {
  const ScoreTable table = ScoreTable::load(scores_path);
  const std::string ref = reference.empty() ? table.models.front() : reference;
  const json summary = report_summary(table, ref);
  if (out_path.empty())
    emit_json(out, summary);
  else
    write_text_file(out_path, summary.dump(2) + "\n");
  return kExitOk;
}

int cmd_serve_toy(const Globals& g, const std::string& checkpoint, const std::string& listen,
                  int max_connections, std::ostream& err) {
  ToyWeights w;
  long step = 0;
  if (!checkpoint.empty()) w = toy_from_checkpoint(read_json_file(checkpoint), &step);
  auto model = std::make_shared<ToyModel>(w, resolve_workers(g.workers));
  if (step) model->restore(toy_checkpoint(w, step));
  bridge::PredictorHandler handler(model);
  if (listen == "stdio") {
    bridge::serve_stdio(handler);
    return kExitOk;
  }
  if (listen.rfind("tcp:", 0) != 0) throw InvalidArgument("--listen must be stdio or tcp:HOST:PORT");
  const std::string rest = listen.substr(4);
  const auto colon = rest.rfind(':');
  if (colon == std::string::npos) throw InvalidArgument("--listen must be tcp:HOST:PORT");
  int port = 0;
  try {
    port = std::stoi(rest.substr(colon + 1));
  } catch (const std::exception&) {
    throw InvalidArgument("bad port in --listen");
  }
  bridge::serve_tcp(handler, rest.substr(0, colon), port,
                    [&](int p) { err << "listening on " << rest.substr(0, colon) << ":" << p << "\n" << std::flush; },
                    max_connections);
  return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust training of tabular in-context models"};
  app.name("rtfm");
  app.fallthrough();
  app.require_subcommand(1);

  Globals g;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Root seed");
  app.add_option("--workers", g.workers, "Worker threads (default: RTFM_WORKERS or all cores)");
  app.add_option("--config", g.config_path, "JSON config (LoopConfig fields)");

  // Flag overrides shared by search and train.
  std::optional<int> n_trials, n_ds, n_train, n_test, n_epochs, n_iter, batch_size;
  std::optional<double> lr, c_frac;
  std::string baselines, strategy;
  auto add_loop_flags = [&](CLI::App* sub) {
    sub->add_option("--n-trials", n_trials);
    sub->add_option("--n-ds", n_ds);
    sub->add_option("--n-train", n_train);
    sub->add_option("--n-test", n_test);
    sub->add_option("--baselines", baselines, "Comma-separated learner names");
    sub->add_option("--strategy", strategy, "tpe or random");
  };

  auto* gen = app.add_subcommand("generate", "Write synthetic datasets (CSV + sidecar JSON)");
  std::string theta_arg, gen_out = "datasets";
  bool random_theta_flag = false;
  int count = 1, gen_train = kDefaultTrainRows, gen_test = kDefaultTestRows;
  gen->add_option("--theta", theta_arg, "Theta as a JSON file or inline object");
  gen->add_flag("--random-theta", random_theta_flag, "Draw a theta per dataset");
  gen->add_option("--count", count);
  gen->add_option("--out", gen_out);
  gen->add_option("--n-train", gen_train);
  gen->add_option("--n-test", gen_test);

  auto* search = app.add_subcommand("search", "Run one parameter search and write the trial log");
  std::string search_model = "toy", search_out;
  search->add_option("--model", search_model, "toy[:CKPT] | frequency | bridge:HOST:PORT | exec:CMD");
  search->add_option("--out", search_out, "Trial log path (default: stdout)");
  add_loop_flags(search);

  auto* dro = app.add_subcommand("dro-solve", "Solve the entropy-constrained weights");
  std::string gaps_arg, trials_path;
  double c_arg = 0.5, tol = kDefaultEntropyTol;
  dro->add_option("--gaps", gaps_arg, "Comma-separated gaps");
  dro->add_option("--trials", trials_path, "Trial log (JSONL)");
  dro->add_option("--c", c_arg, "Entropy fraction c in (0,1)");
  dro->add_option("--tol", tol);

  auto* train = app.add_subcommand("train", "Run the robust training loop");
  std::string train_model = "toy", train_out = "run";
  bool resume = false;
  train->add_option("--model", train_model, "toy[:CKPT] | bridge:HOST:PORT | exec:CMD");
  train->add_option("--out", train_out, "Run directory");
  train->add_flag("--resume", resume, "Continue from the last completed epoch");
  train->add_option("--n-epochs", n_epochs);
  train->add_option("--n-iter", n_iter);
  train->add_option("--batch-size", batch_size);
  train->add_option("--lr", lr);
  train->add_option("--c-frac", c_frac);
  add_loop_flags(train);

  auto* eval = app.add_subcommand("eval", "Score a model on a directory of datasets");
  std::string eval_data, eval_model = "toy", eval_out;
  eval->add_option("--data", eval_data)->required();
  eval->add_option("--model", eval_model, "toy[:CKPT] | frequency | bridge:... | learner name");
  eval->add_option("--out", eval_out, "CSV path (default: stdout)");

  auto* report = app.add_subcommand("report", "Summarize a score table");
  std::string scores_path, reference, report_out;
  report->add_option("--scores", scores_path)->required();
  report->add_option("--reference", reference, "Model compared pairwise (default: first column)");
  report->add_option("--out", report_out);

  auto* serve = app.add_subcommand("serve-toy", "Host the toy model behind the bridge protocol");
  std::string checkpoint, listen = "stdio";
  int max_connections = 0;
  serve->add_option("--checkpoint", checkpoint);
  serve->add_option("--listen", listen, "stdio or tcp:HOST:PORT");
  serve->add_option("--max-connections", max_connections);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }
  if (seed_opt->count() > 0) g.seed = seed_value;

  auto loop_config = [&]() {
    LoopConfig c = load_config(g);
    if (n_trials) c.n_trials = *n_trials;
    if (n_ds) c.n_ds = *n_ds;
    if (n_train) c.n_train = *n_train;
    if (n_test) c.n_test = *n_test;
    if (n_epochs) c.n_epochs = *n_epochs;
    if (n_iter) c.n_iter = *n_iter;
    if (batch_size) c.batch_size = *batch_size;
    if (lr) c.lr = *lr;
    if (c_frac) c.c_frac = *c_frac;
    if (!baselines.empty()) {
      c.baselines.clear();
      std::stringstream ss(baselines);
      std::string name;
      while (std::getline(ss, name, ','))
        if (!name.empty()) c.baselines.push_back(name);
    }
    if (!strategy.empty()) c.strategy = strategy;
    c.validate();
    return c;
  };

  try {
    if (*gen) return cmd_generate(g, theta_arg, random_theta_flag, count, gen_out, gen_train, gen_test, out);
    if (*search) return cmd_search(g, loop_config(), search_model, search_out, out, err);
    if (*dro) return cmd_dro(gaps_arg, trials_path, c_arg, tol, out);
    if (*train) return cmd_train(loop_config(), train_model, train_out, resume, out);
    if (*eval) return cmd_eval(g, eval_data, eval_model, eval_out, out);
    if (*report) return cmd_report(scores_path, reference, report_out, out);
    if (*serve) return cmd_serve_toy(g, checkpoint, listen, max_connections, err);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error [" << e.code() << "]: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace rtfm::cli
