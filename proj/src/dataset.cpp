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

#include "rtfm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "rtfm/common.hpp"

namespace rtfm {

using nlohmann::json;

namespace {

std::vector<int> labels_at(const std::vector<int>& y, const std::vector<int>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(y[static_cast<std::size_t>(i)]);
  return out;
}

json kinds_to_json(const std::vector<FeatureKind>& kinds) {
  json arr = json::array();
  for (const auto& k : kinds) {
    if (k.is_categorical())
      arr.push_back({{"type", "categorical"}, {"num_categories", k.num_categories},
                     {"ordered", k.ordered}});
    else
      arr.push_back({{"type", "numeric"}});
  }
  return arr;
}

std::vector<FeatureKind> kinds_from_json(const json& arr) {
  std::vector<FeatureKind> kinds;
  for (const auto& k : arr) {
    const auto type = k.at("type").get<std::string>();
    if (type == "numeric")
      kinds.push_back(FeatureKind::numeric());
    else if (type == "categorical")
      kinds.push_back(FeatureKind::categorical(k.at("num_categories").get<int>(),
                                               k.at("ordered").get<bool>()));
    else
      throw InvalidArgument("unknown feature kind '" + type + "'");
  }
  return kinds;
}

void apply_sidecar(TabularDataset& ds, const json& meta) {
  ds.feature_kinds = kinds_from_json(meta.at("feature_kinds"));
  ds.train_indices = meta.at("train_indices").get<std::vector<int>>();
  ds.test_indices = meta.at("test_indices").get<std::vector<int>>();
  ds.n_classes = meta.at("n_classes").get<int>();
  if (meta.contains("theta") && !meta.at("theta").is_null())
    ds.provenance = Provenance{theta_from_json(meta.at("theta")),
                               meta.at("seed").get<std::uint64_t>()};
}

void write_canonical(const json& j, std::string& out) {
  switch (j.type()) {
    case json::value_t::object: {
      out.push_back('{');
      bool first = true;
      for (const auto& [key, value] : j.items()) {  // std::map order: sorted
        if (!first) out.push_back(',');
        first = false;
        out += json(key).dump();
        out.push_back(':');
        write_canonical(value, out);
      }
      out.push_back('}');
      break;
    }
    case json::value_t::array: {
      out.push_back('[');
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out.push_back(',');
        write_canonical(j[i], out);
      }
      out.push_back(']');
      break;
    }
    case json::value_t::number_float:
      out += format_double(j.get<double>());
      break;
    default:
      out += j.dump();
  }
}

}  // namespace

std::vector<int> TabularDataset::test_labels() const { return labels_at(y, test_indices); }
std::vector<int> TabularDataset::train_labels() const { return labels_at(y, train_indices); }

void TabularDataset::validate() const {
  const auto n = static_cast<std::size_t>(rows());
  const auto p = static_cast<std::size_t>(cols());
  if (missing.rows() != x.rows() || missing.cols() != x.cols())
    throw InvalidArgument("dataset: missing mask shape differs from x");
  if (feature_kinds.size() != p) throw InvalidArgument("dataset: feature_kinds size != columns");
  if (y.size() != n) throw InvalidArgument("dataset: label count != rows");
  if (n_classes < 1) throw InvalidArgument("dataset: n_classes must be >= 1");
  for (int v : y)
    if (v < 0 || v >= n_classes) throw InvalidArgument("dataset: label out of range");
  std::vector<char> seen(n, 0);
  for (const auto* idx : {&train_indices, &test_indices})
    for (int i : *idx) {
      if (i < 0 || static_cast<std::size_t>(i) >= n || seen[static_cast<std::size_t>(i)])
        throw InvalidArgument("dataset: train/test indices do not partition rows");
      seen[static_cast<std::size_t>(i)] = 1;
    }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw InvalidArgument("dataset: train/test indices do not cover all rows");
  if (train_indices.empty() || test_indices.empty())
    throw InvalidArgument("dataset: empty train or test split");
  for (int i : test_indices)
    if (missing.row(i).any()) throw InvalidArgument("dataset: masked cell in a test row");
  for (std::size_t c = 0; c < p; ++c) {
    const auto& kind = feature_kinds[c];
    for (std::size_t r = 0; r < n; ++r) {
      const auto ri = static_cast<Eigen::Index>(r), ci = static_cast<Eigen::Index>(c);
      if (missing(ri, ci)) continue;
      const double v = x(ri, ci);
      if (!std::isfinite(v)) throw InvalidArgument("dataset: non-finite observed cell");
      if (kind.is_categorical() &&
          (v != std::floor(v) || v < 0 || v >= kind.num_categories))
        throw InvalidArgument("dataset: categorical code out of range");
    }
  }
}

std::string format_double(double v) {
  if (!std::isfinite(v)) throw InvalidArgument("cannot serialize a non-finite number");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string canonical_dump(const json& j) {
  std::string out;
  write_canonical(j, out);
  return out;
}

std::string to_csv(const TabularDataset& ds) {
  std::string out;
  for (int c = 0; c < ds.cols(); ++c) out += "f" + std::to_string(c) + ",";
  out += "y\n";
  for (int r = 0; r < ds.rows(); ++r) {
    for (int c = 0; c < ds.cols(); ++c) {
      if (!ds.missing(r, c)) out += format_double(ds.x(r, c));
      out.push_back(',');
    }
    out += std::to_string(ds.y[static_cast<std::size_t>(r)]);
    out.push_back('\n');
  }
  return out;
}

json sidecar_json(const TabularDataset& ds) {
  json meta{{"feature_kinds", kinds_to_json(ds.feature_kinds)},
            {"train_indices", ds.train_indices},
            {"test_indices", ds.test_indices},
            {"n_classes", ds.n_classes}};
  if (ds.provenance) {
    meta["theta"] = to_json(ds.provenance->theta);
    meta["seed"] = ds.provenance->seed;
  } else {
    meta["theta"] = nullptr;
    meta["seed"] = nullptr;
  }
  return meta;
}

TabularDataset from_csv(const std::string& csv, const json& sidecar) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("csv: empty input");
  const auto p = static_cast<int>(std::count(line.begin(), line.end(), ','));
  std::vector<std::vector<std::string>> cells;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> row;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) row.push_back(cell);
    if (!line.empty() && line.back() == ',') row.emplace_back();
    if (static_cast<int>(row.size()) != p + 1)
      throw InvalidArgument("csv: row with " + std::to_string(row.size()) + " cells, expected " +
                            std::to_string(p + 1));
    cells.push_back(std::move(row));
  }
  TabularDataset ds;
  const auto n = static_cast<Eigen::Index>(cells.size());
  ds.x = Eigen::MatrixXd::Zero(n, p);
  ds.missing = MissingMask::Constant(n, p, false);
  ds.y.resize(cells.size());
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = cells[static_cast<std::size_t>(r)];
    for (int c = 0; c < p; ++c) {
      const auto& s = row[static_cast<std::size_t>(c)];
      if (s.empty()) {
        ds.missing(r, c) = true;
        ds.x(r, c) = std::numeric_limits<double>::quiet_NaN();
      } else {
        ds.x(r, c) = std::stod(s);
      }
    }
    ds.y[static_cast<std::size_t>(r)] = std::stoi(row.back());
  }
  try {
    apply_sidecar(ds, sidecar);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("sidecar: ") + e.what());
  }
  ds.validate();
  return ds;
}

void write_dataset(const TabularDataset& ds, const std::filesystem::path& csv_path,
                   const std::filesystem::path& json_path) {
  std::ofstream(csv_path, std::ios::binary) << to_csv(ds);
  std::ofstream(json_path, std::ios::binary) << canonical_dump(sidecar_json(ds)) << '\n';
}

TabularDataset read_dataset(const std::filesystem::path& csv_path,
                            const std::filesystem::path& json_path) {
  std::ifstream csv(csv_path, std::ios::binary), meta(json_path, std::ios::binary);
  if (!csv) throw InvalidArgument("cannot open " + csv_path.string());
  if (!meta) throw InvalidArgument("cannot open " + json_path.string());
  std::stringstream buf;
  buf << csv.rdbuf();
  json sidecar;
  try {
    sidecar = json::parse(meta);
  } catch (const json::exception& e) {
    throw InvalidArgument(json_path.string() + ": " + e.what());
  }
  return from_csv(buf.str(), sidecar);
}

json to_payload(const TabularDataset& ds) {
  json payload = sidecar_json(ds);
  json columns = json::array();
  for (int c = 0; c < ds.cols(); ++c) columns.push_back("f" + std::to_string(c));
  columns.push_back("y");
  json rows = json::array();
  for (int r = 0; r < ds.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < ds.cols(); ++c) {
      if (ds.missing(r, c))
        row.push_back(nullptr);
      else
        row.push_back(ds.x(r, c));
    }
    row.push_back(ds.y[static_cast<std::size_t>(r)]);
    rows.push_back(std::move(row));
  }
  payload["columns"] = std::move(columns);
  payload["rows"] = std::move(rows);
  return payload;
}

TabularDataset from_payload(const json& payload) {
  TabularDataset ds;
  try {
    const auto& rows = payload.at("rows");
    const auto p = static_cast<Eigen::Index>(payload.at("columns").size()) - 1;
    if (p < 0) throw InvalidArgument("payload: no columns");
    const auto n = static_cast<Eigen::Index>(rows.size());
    ds.x = Eigen::MatrixXd::Zero(n, p);
    ds.missing = MissingMask::Constant(n, p, false);
    ds.y.resize(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto& row = rows.at(static_cast<std::size_t>(r));
      if (static_cast<Eigen::Index>(row.size()) != p + 1)
        throw InvalidArgument("payload: ragged row");
      for (Eigen::Index c = 0; c < p; ++c) {
        const auto& cell = row.at(static_cast<std::size_t>(c));
        if (cell.is_null()) {
          ds.missing(r, c) = true;
          ds.x(r, c) = std::numeric_limits<double>::quiet_NaN();
        } else {
          ds.x(r, c) = cell.get<double>();
        }
      }
      ds.y[static_cast<std::size_t>(r)] = row.at(static_cast<std::size_t>(p)).get<int>();
    }
    apply_sidecar(ds, payload);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("payload: ") + e.what());
  }
  ds.validate();
  return ds;
}

std::string dataset_hash(const TabularDataset& ds) {
  return sha256_hex(canonical_dump(to_payload(ds)));
}

}  // namespace rtfm
