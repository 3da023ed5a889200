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

#include "xtts/xvector.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace xtts {

namespace {

Mat RandomMatrix(int rows, int cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, stddev);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

std::string JoinIds(const std::vector<int>& ids) {
  std::string s;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(ids[i]);
  }
  return s;
}

}  // namespace

XVectorConfig XVectorConfig::Reference() {
  XVectorConfig c;
  c.contexts = {5, 3, 3, 1, 1};
  c.hidden = 256;
  c.d_xvec = 256;
  return c;
}

XVectorConfig XVectorConfig::FromKv(const KvConfig& kv) {
  XVectorConfig c = kv.GetString("preset", "desk") == "reference" ? Reference() : Desk();
  c.n_mels = static_cast<int>(kv.GetInt("n_mels", c.n_mels));
  c.contexts = kv.GetIntList("contexts", c.contexts);
  c.hidden = static_cast<int>(kv.GetInt("hidden", c.hidden));
  c.d_xvec = static_cast<int>(kv.GetInt("d_xvec", c.d_xvec));
  c.var_floor = kv.GetDouble("var_floor", c.var_floor);
  return c;
}

KvConfig XVectorConfig::ToKv() const {
  KvConfig kv;
  kv.Set("n_mels", n_mels);
  kv.Set("contexts", JoinIds(contexts));
  kv.Set("hidden", hidden);
  kv.Set("d_xvec", d_xvec);
  kv.Set("var_floor", var_floor);
  return kv;
}

void XVectorConfig::Validate() const {
  if (contexts.empty()) throw std::invalid_argument("x-vector needs at least one frame-level layer");
  for (int c : contexts) {
    if (c < 1 || c % 2 == 0) throw std::invalid_argument("x-vector contexts must be odd and positive");
  }
  if (n_mels < 1 || hidden < 1 || d_xvec < 1) throw std::invalid_argument("bad x-vector sizes");
  if (var_floor <= 0.0) throw std::invalid_argument("var_floor must be positive");
}

int XVectorConfig::MinFrames() const {
  int n = 1;
  for (int c : contexts) n += c - 1;
  return n;
}

XVectorModel::XVectorModel(const XVectorConfig& config, std::vector<int> speaker_ids, std::uint64_t seed)
    : config_(config), speaker_ids_(std::move(speaker_ids)) {
  config_.Validate();
  if (speaker_ids_.empty()) throw std::invalid_argument("x-vector model needs at least one speaker");
  std::mt19937_64 rng(seed);
  int in = config_.n_mels;
  for (size_t i = 0; i < config_.contexts.size(); ++i) {
    const int c = config_.contexts[i];
    std::vector<int> off;
    for (int k = -(c / 2); k <= c / 2; ++k) off.push_back(k);
    offsets_.push_back(off);
    const int fan_in = in * c;
    const std::string name = "frame." + std::to_string(i);
    frame_w_.push_back(&params_.Add(name + ".w", RandomMatrix(fan_in, config_.hidden, std::sqrt(2.0 / fan_in), rng)));
    frame_b_.push_back(&params_.Add(name + ".b", Mat::Zero(1, config_.hidden)));
    in = config_.hidden;
  }
  seg_w_ = &params_.Add("segment.w", RandomMatrix(2 * config_.hidden, config_.d_xvec,
                                                  1.0 / std::sqrt(2.0 * config_.hidden), rng));
  seg_b_ = &params_.Add("segment.b", Mat::Zero(1, config_.d_xvec));
  const int n_spk = static_cast<int>(speaker_ids_.size());
  out_w_ = &params_.Add("softmax.w", RandomMatrix(config_.d_xvec, n_spk, 1.0 / std::sqrt(config_.d_xvec), rng));
  out_b_ = &params_.Add("softmax.b", Mat::Zero(1, n_spk));
}

int XVectorModel::SpeakerIndex(int speaker_id) const {
  auto it = std::find(speaker_ids_.begin(), speaker_ids_.end(), speaker_id);
  if (it == speaker_ids_.end()) throw std::out_of_range("x-vector model: unknown speaker id " + std::to_string(speaker_id));
  return static_cast<int>(it - speaker_ids_.begin());
}

bool XVectorModel::HasSpeaker(int speaker_id) const {
  return std::find(speaker_ids_.begin(), speaker_ids_.end(), speaker_id) != speaker_ids_.end();
}

bool XVectorModel::HasCompleted(const std::string& stage) const {
  return std::find(completed_stages_.begin(), completed_stages_.end(), stage) != completed_stages_.end();
}

Var XVectorModel::P(Tape& tape, Parameter* p, bool frozen) {
  return frozen ? tape.Frozen(*p) : tape.Param(*p);
}

Var XVectorModel::Embed(Tape& tape, Var mel, bool frozen) {
  if (mel.cols() != config_.n_mels) throw std::invalid_argument("x-vector input has the wrong n_mels");
  if (mel.rows() < config_.MinFrames()) {
    throw std::invalid_argument("x-vector input has " + std::to_string(mel.rows()) +
                                " frames; at least " + std::to_string(config_.MinFrames()) + " are required");
  }
  Var h = mel;
  for (size_t i = 0; i < offsets_.size(); ++i) {
    h = Relu(Affine(Splice(h, offsets_[i]), P(tape, frame_w_[i], frozen), P(tape, frame_b_[i], frozen)));
  }
  Var pooled = StatsPool(h, config_.var_floor);
  return Affine(pooled, P(tape, seg_w_, frozen), P(tape, seg_b_, frozen));
}

Var XVectorModel::Classify(Tape& tape, Var xvec, bool frozen) {
  return Affine(Relu(xvec), P(tape, out_w_, frozen), P(tape, out_b_, frozen));
}

RowVec XVectorModel::EmbedValue(const Mat& mel) {
  Tape tape(false);
  return Embed(tape, tape.Constant(mel), true).value().row(0);
}

void XVectorModel::AppendSpeaker(int speaker_id) {
  if (std::find(speaker_ids_.begin(), speaker_ids_.end(), speaker_id) != speaker_ids_.end()) {
    throw std::invalid_argument("x-vector model: speaker id " + std::to_string(speaker_id) + " already exists");
  }
  Mat& w = out_w_->value;
  const Eigen::VectorXd mean_col = w.rowwise().mean();
  w.conservativeResize(Eigen::NoChange, w.cols() + 1);
  w.col(w.cols() - 1) = mean_col;
  out_w_->ZeroGrad();
  Mat& b = out_b_->value;
  const double mean_b = b.mean();
  b.conservativeResize(Eigen::NoChange, b.cols() + 1);
  b(0, b.cols() - 1) = mean_b;
  out_b_->ZeroGrad();
  speaker_ids_.push_back(speaker_id);
}

Checkpoint XVectorModel::ToCheckpoint() const {
  Checkpoint ckpt;
  ckpt.kind = "xvector";
  ckpt.meta = config_.ToKv();
  ckpt.meta.Set("speaker_ids", JoinIds(speaker_ids_));
  std::string stages;
  for (size_t i = 0; i < completed_stages_.size(); ++i) stages += (i ? "," : "") + completed_stages_[i];
  ckpt.meta.Set("completed_stages", stages);
  AppendParams(params_, ckpt);
  return ckpt;
}

XVectorModel XVectorModel::FromCheckpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != "xvector") throw std::runtime_error("checkpoint kind is '" + ckpt.kind + "', expected 'xvector'");
  XVectorModel model(XVectorConfig::FromKv(ckpt.meta), ckpt.meta.GetIntList("speaker_ids", {}), 0);
  std::stringstream ss(ckpt.meta.GetString("completed_stages", ""));
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) model.completed_stages_.push_back(item);
  }
  RestoreParams(ckpt, model.params_);
  return model;
}

double CosineDistance(const RowVec& a, const RowVec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine distance: length mismatch");
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine distance of a zero vector is undefined");
  const double d = 1.0 - a.dot(b) / (na * nb);
  return std::clamp(d, 0.0, 2.0);
}

double L2DistanceValue(const RowVec& a, const RowVec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("l2 distance: length mismatch");
  return (a - b).norm();
}

}  // namespace xtts
