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

#include <doctest.h>

#include "rtfm/store.hpp"
#include "support.hpp"

using namespace rtfm;

TEST_CASE("manifest records seeds and file hashes") {
  const auto dir = testing::temp_dir("store");
  write_text_file(dir / "a.txt", "abc");
  write_text_file(dir / "sub" / "b.txt", "");
  RunManifest m;
  m.root_seed = 7;
  m.config = {{"n_trials", 3}};
  CHECK(m.seed_for("search") == derive_seed(7, "search"));
  CHECK(m.seed_for("train", 2, true) == derive_seed(7, "train", 2));
  m.write(dir);
  CHECK(m.files.size() == 2);
  CHECK(m.files.at("a.txt") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(m.files.count("sub/b.txt") == 1);
  CHECK(m.derived_seeds.at("train/2") == derive_seed(7, "train", 2));

  const RunManifest back = RunManifest::from_json(read_json_file(dir / kManifestName));
  CHECK(back.to_json() == m.to_json());
  CHECK(back.version == code_version());
  const std::string first = read_text_file(dir / kManifestName);
  m.write(dir);
  CHECK(read_text_file(dir / kManifestName) == first);
  CHECK(file_sha256(dir / "a.txt") == sha256_hex("abc"));
  CHECK_THROWS_AS(read_text_file(dir / "missing"), InvalidArgument);
  CHECK_THROWS_AS(RunManifest::from_json({{"version", 1}}), InvalidArgument);
  std::filesystem::remove_all(dir);
}
