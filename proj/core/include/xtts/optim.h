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

#ifndef XTTS_OPTIM_H_
#define XTTS_OPTIM_H_

#include <unordered_map>

#include "xtts/autodiff.h"

namespace xtts {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 1.0;  // global gradient-norm clip; <= 0 disables
};

class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  /// Applies one update with learning rate `lr` to every parameter, then
  /// zeroes the gradients. Returns the pre-clip gradient norm.
  double Step(ParamSet& params, double lr);

 private:
  struct Moments {
    Mat m, v;
  };
  AdamOptions options_;
  std::unordered_map<const Parameter*, Moments> state_;
  long long t_ = 0;
};

/// Exponential decay schedule: constant `initial` for steps < decay_start,
/// then initial * decay_rate^(step - decay_start), floored at `min_lr`.
/// Steps are 1-based.
double ExponentialDecayLr(double initial, int decay_start, double decay_rate, double min_lr, int step);

}  // namespace xtts

#endif  // XTTS_OPTIM_H_
