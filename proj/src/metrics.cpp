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

#include "rtfm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "rtfm/common.hpp"
#include "rtfm/dataset.hpp"

namespace rtfm {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw InvalidArgument("auc: length mismatch");
  double n_pos = 0.0, n_neg = 0.0, rank_pos = 0.0;
  const std::vector<double> ranks = average_ranks(scores);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      n_pos += 1.0;
      rank_pos += ranks[i];
    } else if (labels[i] == 0) {
      n_neg += 1.0;
    } else {
      throw InvalidArgument("auc: labels must be 0 or 1");
    }
  }
  if (n_pos == 0.0 || n_neg == 0.0) throw Error("undefined-metric", "auc needs both classes");
  const double u = rank_pos - n_pos * (n_pos + 1.0) / 2.0;
  return u / (n_pos * n_neg);
}

double auc_ovo(const ClassProbMatrix& probs, std::span<const int> labels) {
  if (static_cast<int>(labels.size()) != probs.rows()) throw InvalidArgument("auc_ovo: length mismatch");
  double total = 0.0;
  int pairs = 0;
  for (int a = 0; a < probs.classes(); ++a)
    for (int b = a + 1; b < probs.classes(); ++b) {
      std::vector<double> s;
      std::vector<int> l;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != a && labels[i] != b) continue;
        const double pa = probs(static_cast<int>(i), a), pb = probs(static_cast<int>(i), b);
        s.push_back(pb / (pa + pb));
        l.push_back(labels[i] == b ? 1 : 0);
      }
      const bool has_a = std::find(l.begin(), l.end(), 0) != l.end();
      const bool has_b = std::find(l.begin(), l.end(), 1) != l.end();
      if (!has_a || !has_b) continue;
      total += auc(s, l);
      ++pairs;
    }
  if (pairs == 0) throw Error("undefined-metric", "auc_ovo: no class pair has both classes");
  return total / pairs;
}

void ScoreTable::validate() const {
  if (scores.rows() != static_cast<Eigen::Index>(datasets.size()) ||
      scores.cols() != static_cast<Eigen::Index>(models.size()))
    throw InvalidArgument("score table: shape does not match names");
  if (scores.size() == 0) throw InvalidArgument("score table: empty");
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    const double v = scores.data()[i];
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
      throw InvalidArgument("score table: entries must lie in [0,1]");
  }
}

int ScoreTable::model_index(const std::string& name) const {
  const auto it = std::find(models.begin(), models.end(), name);
  if (it == models.end()) throw InvalidArgument("score table: unknown model '" + name + "'");
  return static_cast<int>(it - models.begin());
}

namespace {
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  return out;
}
}  // namespace

ScoreTable ScoreTable::from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("score table: empty csv");
  ScoreTable t;
  auto header = split_csv_line(line);
  if (header.size() < 2) throw InvalidArgument("score table: need at least one model column");
  t.models.assign(header.begin() + 1, header.end());
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw InvalidArgument("score table: row '" + cells.front() + "' has wrong width (missing cell?)");
    t.datasets.push_back(cells.front());
    std::vector<double> row;
    for (std::size_t i = 1; i < cells.size(); ++i) {
      try {
        row.push_back(std::stod(cells[i]));
      } catch (const std::exception&) {
        throw InvalidArgument("score table: bad number '" + cells[i] + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  t.scores.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.models.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      t.scores(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  t.validate();
  return t;
}

ScoreTable ScoreTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_csv(buf.str());
}

std::string ScoreTable::to_csv() const {
  std::string out = "dataset";
  for (const auto& m : models) out += "," + m;
  out += "\n";
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    out += datasets[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < scores.cols(); ++c) out += "," + format_double(scores(r, c));
    out += "\n";
  }
  return out;
}

ScoreTable normalize_per_dataset(const ScoreTable& table, int* constant_rows) {
  table.validate();
  ScoreTable out = table;
  int constant = 0;
  for (Eigen::Index r = 0; r < out.scores.rows(); ++r) {
    auto row = out.scores.row(r);
    const double lo = row.minCoeff(), hi = row.maxCoeff();
    if (hi > lo) {
      row = ((row.array() - lo) / (hi - lo)).matrix();
    } else {
      row.setConstant(0.5);
      ++constant;
    }
  }
  if (constant_rows) *constant_rows = constant;
  return out;
}

std::vector<double> column_means(const ScoreTable& table) {
  std::vector<double> out(table.models.size());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = table.scores.col(static_cast<Eigen::Index>(c)).mean();
  return out;
}

std::vector<double> mean_rank(const ScoreTable& table) {
  table.validate();
  const auto k = static_cast<std::size_t>(table.scores.cols());
  std::vector<double> total(k, 0.0);
  for (Eigen::Index r = 0; r < table.scores.rows(); ++r) {
    std::vector<double> neg(k);
    for (std::size_t c = 0; c < k; ++c) neg[c] = -table.scores(r, static_cast<Eigen::Index>(c));
    const auto ranks = average_ranks(neg);
    for (std::size_t c = 0; c < k; ++c) total[c] += ranks[c];
  }
  for (double& v : total) v /= static_cast<double>(table.scores.rows());
  return total;
}

std::vector<int> rank1_wins(const ScoreTable& table) {
  table.validate();
  std::vector<int> wins(table.models.size(), 0);
  for (Eigen::Index r = 0; r < table.scores.rows(); ++r) {
    Eigen::Index best;
    const double top = table.scores.row(r).maxCoeff(&best);
    if ((table.scores.row(r).array() == top).count() == 1) ++wins[static_cast<std::size_t>(best)];
  }
  return wins;
}

FriedmanResult friedman_test(const ScoreTable& table) {
  table.validate();
  const auto n = static_cast<double>(table.scores.rows());
  const auto k = static_cast<std::size_t>(table.scores.cols());
  if (k < 3) throw InvalidArgument("friedman_test: needs at least 3 models");
  if (table.scores.rows() < 2) throw InvalidArgument("friedman_test: needs at least 2 datasets");
  std::vector<double> rank_sums(k, 0.0);
  double tie_term = 0.0;
  for (Eigen::Index r = 0; r < table.scores.rows(); ++r) {
    std::vector<double> row(k);
    for (std::size_t c = 0; c < k; ++c) row[c] = table.scores(r, static_cast<Eigen::Index>(c));
    const auto ranks = average_ranks(row);
    for (std::size_t c = 0; c < k; ++c) rank_sums[c] += ranks[c];
    std::vector<double> sorted = row;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < k;) {
      std::size_t j = i;
      while (j + 1 < k && sorted[j + 1] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i + 1);
      tie_term += t * t * t - t;
      i = j + 1;
    }
  }
  const double kd = static_cast<double>(k);
  double ss = 0.0;
  for (double rs : rank_sums) ss += rs * rs;
  const double raw = 12.0 / (n * kd * (kd + 1.0)) * ss - 3.0 * n * (kd + 1.0);
  const double correction = 1.0 - tie_term / (n * kd * (kd * kd - 1.0));
  FriedmanResult res;
  res.dof = static_cast<int>(k) - 1;
  res.statistic = correction > 1e-12 ? std::max(0.0, raw / correction) : 0.0;
  res.p_value = boost::math::gamma_q(0.5 * res.dof, 0.5 * res.statistic);
  return res;
}

double wilcoxon_exact_p(std::span<const double> ranks, double w_plus) {
  // Doubled ranks are integers even with mid-rank ties.
  std::vector<int> r2;
  int total = 0;
  for (double r : ranks) {
    r2.push_back(static_cast<int>(std::lround(2.0 * r)));
    total += r2.back();
  }
  std::vector<double> dist(static_cast<std::size_t>(total) + 1, 0.0);
  dist[0] = 1.0;
  int reach = 0;
  for (int v : r2) {
    for (int s = reach; s >= 0; --s)
      if (dist[static_cast<std::size_t>(s)] != 0.0)
        dist[static_cast<std::size_t>(s + v)] += dist[static_cast<std::size_t>(s)];
    reach += v;
  }
  const double count = std::ldexp(1.0, static_cast<int>(ranks.size()));
  const int w2 = static_cast<int>(std::lround(2.0 * w_plus));
  double lower = 0.0, upper = 0.0;
  for (int s = 0; s <= total; ++s) {
    if (s <= w2) lower += dist[static_cast<std::size_t>(s)];
    if (s >= w2) upper += dist[static_cast<std::size_t>(s)];
  }
  return std::min(1.0, 2.0 * std::min(lower, upper) / count);
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("wilcoxon: paired lists differ in length");
  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (!std::isfinite(d)) throw InvalidArgument("wilcoxon: non-finite value");
    if (d != 0.0) diffs.push_back(d);
  }
  WilcoxonResult res;
  res.n = static_cast<int>(diffs.size());
  if (diffs.empty()) return res;
  std::vector<double> abs_d(diffs.size());
  for (std::size_t i = 0; i < diffs.size(); ++i) abs_d[i] = std::abs(diffs[i]);
  const auto ranks = average_ranks(abs_d);
  for (std::size_t i = 0; i < diffs.size(); ++i)
    if (diffs[i] > 0.0) res.w_plus += ranks[i];

  if (res.n <= kWilcoxonExactMax) {
    res.exact = true;
    res.p_value = wilcoxon_exact_p(ranks, res.w_plus);
    return res;
  }
  res.exact = false;
  const double n = res.n;
  const double mean = n * (n + 1.0) / 4.0;
  double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
  std::vector<double> sorted = abs_d;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    var -= (t * t * t - t) / 48.0;
    i = j + 1;
  }
  const double z = std::max(0.0, std::abs(res.w_plus - mean) - 0.5) / std::sqrt(var);
  res.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return res;
}

nlohmann::json report_summary(const ScoreTable& table, const std::string& reference) {
  int constant = 0;
  const ScoreTable norm = normalize_per_dataset(table, &constant);
  if (constant > 0)
    std::cerr << "warning: " << constant << " constant dataset rows normalized to 0.5\n";
  const auto ranks = mean_rank(table);
  const auto wins = rank1_wins(table);
  const auto means = column_means(norm);
  nlohmann::json j;
  j["models"] = table.models;
  j["n_datasets"] = table.datasets.size();
  j["constant_rows"] = constant;
  for (std::size_t m = 0; m < table.models.size(); ++m) {
    j["mean_rank"][table.models[m]] = ranks[m];
    j["mean_normalized"][table.models[m]] = means[m];
    j["rank1_wins"][table.models[m]] = wins[m];
  }
  if (table.models.size() >= 3 && table.datasets.size() >= 2) {
    const auto fr = friedman_test(table);
    j["friedman"] = {{"statistic", fr.statistic}, {"dof", fr.dof}, {"p_value", fr.p_value}};
  }
  const int ref = table.model_index(reference);
  j["reference"] = reference;
  const Eigen::VectorXd ref_col = table.scores.col(ref);
  for (std::size_t m = 0; m < table.models.size(); ++m) {
    if (static_cast<int>(m) == ref) continue;
    const Eigen::VectorXd other = table.scores.col(static_cast<Eigen::Index>(m));
    const auto w = wilcoxon_signed_rank(std::span(ref_col.data(), static_cast<std::size_t>(ref_col.size())),
                                        std::span(other.data(), static_cast<std::size_t>(other.size())));
    j["wilcoxon"][table.models[m]] = {{"p_value", w.p_value}, {"w_plus", w.w_plus}, {"n", w.n},
                                      {"exact", w.exact}};
  }
  return j;
}

}  // namespace rtfm
