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

#include "xtts/optim.h"

#include <algorithm>
#include <cmath>

namespace xtts {

double Adam::Step(ParamSet& params, double lr) {
  const double norm = params.GradNorm();
  double scale = 1.0;
  if (options_.clip_norm > 0.0 && norm > options_.clip_norm) scale = options_.clip_norm / norm;
  ++t_;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  for (Parameter* p : params.All()) {
    Moments& s = state_[p];
    if (s.m.rows() != p->value.rows() || s.m.cols() != p->value.cols()) {
      // New parameter, or one that grew (speaker extension): restart its moments.
      s.m = Mat::Zero(p->value.rows(), p->value.cols());
      s.v = Mat::Zero(p->value.rows(), p->value.cols());
    }
    const Mat g = p->grad * scale;
    s.m = options_.beta1 * s.m + (1.0 - options_.beta1) * g;
    s.v = options_.beta2 * s.v + (1.0 - options_.beta2) * g.cwiseProduct(g);
    p->value.array() -= lr * (s.m.array() / bc1) / ((s.v.array() / bc2).sqrt() + options_.eps);
    p->ZeroGrad();
  }
  return norm;
}

double ExponentialDecayLr(double initial, int decay_start, double decay_rate, double min_lr, int step) {
  if (step < decay_start) return std::max(initial, min_lr);
  const double lr = initial * std::pow(decay_rate, static_cast<double>(step - decay_start));
  return std::max(lr, min_lr);
}

}  // namespace xtts
