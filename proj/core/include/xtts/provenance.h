// Copyright 2026 The xtts Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Reproducibility manifest written next to every output: the command, the
// fully resolved configuration, all seeds, component versions and SHA-256
// hashes of inputs and outputs. It contains no timestamps or host data, so
// two identical runs write identical manifests.

#ifndef XTTS_PROVENANCE_H_
#define XTTS_PROVENANCE_H_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "xtts/kvconfig.h"

namespace xtts {

inline constexpr const char* kXttsVersion = "0.1.0";
inline constexpr const char* kProvenanceFile = "provenance.json";

std::string Sha256Hex(std::string_view bytes);
std::string Sha256File(const std::string& path);

/// Relative path -> SHA-256 of every regular file under `dir`, recursively,
/// skipping the provenance manifest itself.
std::map<std::string, std::string> HashDirectory(const std::string& dir);

struct Provenance {
  std::string command;
  KvConfig config;
  std::map<std::string, std::uint64_t> seeds;
  std::map<std::string, std::string> inputs;   // path -> sha256
  std::map<std::string, std::string> outputs;  // path relative to the output dir -> sha256

  std::string ToJson() const;
  static Provenance FromJson(const std::string& text);
};

/// Component versions recorded in every manifest.
std::map<std::string, std::string> Versions();

/// Hashes `dir` into `p.outputs` and writes <dir>/provenance.json.
void WriteProvenance(Provenance p, const std::string& dir);
Provenance ReadProvenance(const std::string& dir);

}  // namespace xtts

#endif  // XTTS_PROVENANCE_H_
