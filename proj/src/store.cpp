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

#include "rtfm/store.hpp"

#include <fstream>
#include <sstream>

#include "rtfm/common.hpp"
#include "rtfm/dataset.hpp"

namespace rtfm {

namespace fs = std::filesystem;
using nlohmann::json;

std::string code_version() {
#ifdef RTFM_VERSION
  return RTFM_VERSION;
#else
  return "unknown";
#endif
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io", "cannot write " + path.string());
  out << text;
  if (!out) throw Error("io", "write failed for " + path.string());
}

json read_json_file(const fs::path& path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

std::string file_sha256(const fs::path& path) { return sha256_hex(read_text_file(path)); }

std::uint64_t RunManifest::seed_for(const std::string& label, std::uint64_t index, bool indexed) {
  const std::uint64_t s = derive_seed(root_seed, label, index);
  derived_seeds[indexed ? label + "/" + std::to_string(index) : label] = s;
  return s;
}

void RunManifest::scan(const fs::path& root) {
  files.clear();
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), root).generic_string();
    if (rel == kManifestName) continue;
    files[rel] = file_sha256(entry.path());
  }
}

json RunManifest::to_json() const {
  json seeds = json::object();
  for (const auto& [k, v] : derived_seeds) seeds[k] = v;
  json inv = json::object();
  for (const auto& [k, v] : files) inv[k] = v;
  return {{"config", config}, {"version", version}, {"root_seed", root_seed},
          {"derived_seeds", seeds}, {"files", inv}};
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  try {
    m.config = j.at("config");
    m.version = j.at("version").get<std::string>();
    m.root_seed = j.at("root_seed").get<std::uint64_t>();
    for (const auto& [k, v] : j.at("derived_seeds").items()) m.derived_seeds[k] = v.get<std::uint64_t>();
    for (const auto& [k, v] : j.at("files").items()) m.files[k] = v.get<std::string>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("manifest: ") + e.what());
  }
  return m;
}

void RunManifest::write(const fs::path& root) {
  fs::create_directories(root);
  scan(root);
  write_text_file(root / kManifestName, canonical_dump(to_json()) + "\n");
}

}  // namespace rtfm
