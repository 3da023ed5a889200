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

// x-vector speaker embedder: spliced frame-level layers, statistics pooling,
// an affine segment layer whose output is the embedding, and a speaker
// softmax head on top.

#ifndef XTTS_XVECTOR_H_
#define XTTS_XVECTOR_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xtts/autodiff.h"
#include "xtts/checkpoint.h"
#include "xtts/kvconfig.h"

namespace xtts {

struct XVectorConfig {
  int n_mels = 20;
  std::vector<int> contexts = {5, 3, 3};  // frames seen by each frame-level layer
  int hidden = 64;
  int d_xvec = 32;
  double var_floor = 1e-6;

  static XVectorConfig Desk() { return {}; }
  /// Hidden size 256 reference preset.
  static XVectorConfig Reference();
  static XVectorConfig FromKv(const KvConfig& kv);
  KvConfig ToKv() const;
  void Validate() const;
  /// Smallest input length that leaves at least one frame after all layers.
  int MinFrames() const;
};

class XVectorModel {
 public:
  XVectorModel(const XVectorConfig& config, std::vector<int> speaker_ids, std::uint64_t seed);

  const XVectorConfig& config() const { return config_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  const std::vector<int>& speaker_ids() const { return speaker_ids_; }
  int SpeakerIndex(int speaker_id) const;
  bool HasSpeaker(int speaker_id) const;
  std::vector<std::string>& completed_stages() { return completed_stages_; }
  const std::vector<std::string>& completed_stages() const { return completed_stages_; }
  bool HasCompleted(const std::string& stage) const;

  /// Embedding of a [frames x n_mels] input on `tape`. With frozen = true the
  /// parameters enter the graph as constants and never receive gradient.
  Var Embed(Tape& tape, Var mel, bool frozen = false);
  /// Speaker logits from an embedding.
  Var Classify(Tape& tape, Var xvec, bool frozen = false);

  /// Graph-free convenience wrapper.
  RowVec EmbedValue(const Mat& mel);

  /// Adds a softmax row for a new speaker, initialised to the mean of the
  /// existing ones.
  void AppendSpeaker(int speaker_id);

  Checkpoint ToCheckpoint() const;
  static XVectorModel FromCheckpoint(const Checkpoint& ckpt);

 private:
  Var P(Tape& tape, Parameter* p, bool frozen);

  XVectorConfig config_;
  std::vector<int> speaker_ids_;
  std::vector<std::string> completed_stages_;
  ParamSet params_;
  std::vector<std::vector<int>> offsets_;
  std::vector<Parameter*> frame_w_, frame_b_;
  Parameter* seg_w_ = nullptr;
  Parameter* seg_b_ = nullptr;
  Parameter* out_w_ = nullptr;
  Parameter* out_b_ = nullptr;
};

/// 1 - a.b / (|a||b|), clamped to [0, 2]. Throws on a zero vector.
double CosineDistance(const RowVec& a, const RowVec& b);
/// |a - b|. Throws on a length mismatch.
double L2DistanceValue(const RowVec& a, const RowVec& b);

}  // namespace xtts

#endif  // XTTS_XVECTOR_H_
