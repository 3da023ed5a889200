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

#ifndef XTTS_TOOLS_CLI_H_
#define XTTS_TOOLS_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace xtts::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Environment variable that relative --out paths are resolved against.
inline constexpr const char* kOutputRootEnv = "XTTS_OUTPUT_ROOT";

/// Entry point of the `xtts` tool. argv[0] is the program name.
int Run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

/// "Baseline", "+MTL", "+MTL+Joint" or "+Joint" from a model's stage history.
std::string SystemLabel(const std::vector<std::string>& completed_stages);

}  // namespace xtts::cli

#endif  // XTTS_TOOLS_CLI_H_
