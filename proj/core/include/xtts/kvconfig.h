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

#ifndef XTTS_KVCONFIG_H_
#define XTTS_KVCONFIG_H_

#include <map>
#include <string>
#include <vector>

namespace xtts {

/// Flat `key = value` configuration. Lines starting with '#' are comments.
/// Keys are kept sorted so serialisation is deterministic.
class KvConfig {
 public:
  static KvConfig Parse(const std::string& text);
  static KvConfig Load(const std::string& path);
  void Save(const std::string& path) const;
  std::string ToString() const;

  bool Has(const std::string& key) const { return values_.count(key) > 0; }
  void Set(const std::string& key, const std::string& value) { values_[key] = value; }
  void Set(const std::string& key, double value);
  void Set(const std::string& key, long long value);
  void Set(const std::string& key, int value) { Set(key, static_cast<long long>(value)); }

  std::string GetString(const std::string& key, const std::string& fallback) const;
  double GetDouble(const std::string& key, double fallback) const;
  long long GetInt(const std::string& key, long long fallback) const;
  std::vector<int> GetIntList(const std::string& key, const std::vector<int>& fallback) const;

  /// Applies every entry of `other` on top of this one.
  void Merge(const KvConfig& other);
  /// Entries whose key starts with `prefix`, with the prefix removed.
  KvConfig Subset(const std::string& prefix) const;
  /// Adds every entry of `other` with `prefix` prepended to its key.
  void MergePrefixed(const std::string& prefix, const KvConfig& other);
  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Round-trippable text form of a double (17 significant digits).
std::string FormatDouble(double v);

}  // namespace xtts

#endif  // XTTS_KVCONFIG_H_
