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

#include "xtts/provenance.h"

#include <openssl/evp.h>

#include <Eigen/Core>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

#include "xtts/checkpoint.h"
#include "xtts/corpus.h"

namespace xtts {

namespace fs = std::filesystem;

std::string Sha256Hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xf]);
  }
  return out;
}

std::string Sha256File(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return Sha256Hex(ss.str());
}

std::map<std::string, std::string> HashDirectory(const std::string& dir) {
  std::map<std::string, std::string> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), dir).generic_string();
    if (rel == kProvenanceFile) continue;
    out[rel] = Sha256File(entry.path().string());
  }
  return out;
}

std::map<std::string, std::string> Versions() {
  return {
      {"xtts", kXttsVersion},
      {"corpus_generator", std::to_string(kCorpusGeneratorVersion)},
      {"checkpoint_format", std::to_string(kCheckpointVersion)},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION)},
      {"compiler", __VERSION__},
  };
}

std::string Provenance::ToJson() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["versions"] = Versions();
  j["seeds"] = seeds;
  j["config"] = config.entries();
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  return j.dump(2) + "\n";
}

Provenance Provenance::FromJson(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  Provenance p;
  p.command = j.at("command").get<std::string>();
  p.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
  for (const auto& [k, v] : j.at("config").get<std::map<std::string, std::string>>()) p.config.Set(k, v);
  p.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
  p.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
  return p;
}

void WriteProvenance(Provenance p, const std::string& dir) {
  fs::create_directories(dir);
  p.outputs = HashDirectory(dir);
  const std::string path = (fs::path(dir) / kProvenanceFile).string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << p.ToJson();
}

Provenance ReadProvenance(const std::string& dir) {
  const std::string path = (fs::path(dir) / kProvenanceFile).string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return Provenance::FromJson(ss.str());
}

}  // namespace xtts
