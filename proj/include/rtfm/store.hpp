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

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

namespace rtfm {

inline constexpr const char* kManifestName = "manifest.json";

std::string code_version();

std::string read_text_file(const std::filesystem::path& path);
// Creates parent directories; writes bytes verbatim.
void write_text_file(const std::filesystem::path& path, const std::string& text);
nlohmann::json read_json_file(const std::filesystem::path& path);
std::string file_sha256(const std::filesystem::path& path);

struct RunManifest {
  nlohmann::json config = nlohmann::json::object();
  std::string version = code_version();
  std::uint64_t root_seed = 0;
  // stage label -> derive_seed(root_seed, label)
  std::map<std::string, std::uint64_t> derived_seeds;
  // path relative to the run directory -> sha256
  std::map<std::string, std::string> files;

  // Registers derive_seed(root_seed, label, index) under "label" or
  // "label/index" and returns it.
  std::uint64_t seed_for(const std::string& label, std::uint64_t index = 0, bool indexed = false);
  // Inventories every regular file under root except the manifest itself.
  void scan(const std::filesystem::path& root);
  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  // scan() then write root/manifest.json canonically.
  void write(const std::filesystem::path& root);
};

}  // namespace rtfm
