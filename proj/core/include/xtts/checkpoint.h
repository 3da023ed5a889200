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

// Versioned checkpoint container.
//
//   "XTCK" | u32 version | str kind | str metadata | u32 count |
//   count x (str name | u32 rows | u32 cols | rows*cols f64, row-major)
//
// All integers and doubles are little-endian; str is u32 length + bytes.
// Doubles are stored bit-exactly.

#ifndef XTTS_CHECKPOINT_H_
#define XTTS_CHECKPOINT_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "xtts/autodiff.h"
#include "xtts/kvconfig.h"

namespace xtts {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string kind;  // "tts" or "xvector"
  KvConfig meta;
  std::vector<std::pair<std::string, Mat>> tensors;

  const Mat& Tensor(const std::string& name) const;
};

std::string SerializeCheckpoint(const Checkpoint& ckpt);
Checkpoint DeserializeCheckpoint(const std::string& bytes);

void SaveCheckpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint LoadCheckpoint(const std::string& path);

/// Copies every parameter of `params` into the container, in order.
void AppendParams(const ParamSet& params, Checkpoint& ckpt);
/// Overwrites the values of `params` from the container; shapes must match.
void RestoreParams(const Checkpoint& ckpt, ParamSet& params);

}  // namespace xtts

#endif  // XTTS_CHECKPOINT_H_
