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

#include "xtts/tts_model.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace xtts {

namespace {

constexpr double kMaskValue = -1e9;

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

std::string JoinStrings(const std::vector<std::string>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += v[i];
  }
  return s;
}

std::vector<std::string> SplitStrings(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

Mat PositionalEncoding(int n, int d) {
  Mat pe(n, d);
  for (int pos = 0; pos < n; ++pos) {
    for (int i = 0; i < d; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / d);
      pe(pos, i) = (i % 2 == 0) ? std::sin(pos * rate) : std::cos(pos * rate);
    }
  }
  return pe;
}

// ---- ModelConfig -----------------------------------------------------------

ModelConfig ModelConfig::FullScale() {
  ModelConfig c;
  c.d_enc = 512;
  c.d_dec = 768;
  c.n_heads = 8;
  c.n_enc_layers = 6;
  c.n_dec_layers = 6;
  c.d_ff = 2048;
  c.d_prenet = 256;
  c.d_spk_emb = 128;
  c.d_lang_emb = 128;
  c.n_mels = 80;
  c.max_frames = 1000;
  c.dropout = 0.1;
  return c;
}

ModelConfig ModelConfig::FromKv(const KvConfig& kv) {
  ModelConfig c = kv.GetString("preset", "desk") == "full" ? FullScale() : Desk();
  c.d_enc = static_cast<int>(kv.GetInt("d_enc", c.d_enc));
  c.d_dec = static_cast<int>(kv.GetInt("d_dec", c.d_dec));
  c.n_heads = static_cast<int>(kv.GetInt("n_heads", c.n_heads));
  c.n_enc_layers = static_cast<int>(kv.GetInt("n_enc_layers", c.n_enc_layers));
  c.n_dec_layers = static_cast<int>(kv.GetInt("n_dec_layers", c.n_dec_layers));
  c.d_ff = static_cast<int>(kv.GetInt("d_ff", c.d_ff));
  c.d_prenet = static_cast<int>(kv.GetInt("d_prenet", c.d_prenet));
  c.d_spk_emb = static_cast<int>(kv.GetInt("d_spk_emb", c.d_spk_emb));
  c.d_lang_emb = static_cast<int>(kv.GetInt("d_lang_emb", c.d_lang_emb));
  c.n_mels = static_cast<int>(kv.GetInt("n_mels", c.n_mels));
  c.max_frames = static_cast<int>(kv.GetInt("max_frames", c.max_frames));
  c.n_phones = static_cast<int>(kv.GetInt("n_phones", c.n_phones));
  c.dropout = kv.GetDouble("dropout", c.dropout);
  return c;
}

KvConfig ModelConfig::ToKv() const {
  KvConfig kv;
  kv.Set("d_enc", d_enc);
  kv.Set("d_dec", d_dec);
  kv.Set("n_heads", n_heads);
  kv.Set("n_enc_layers", n_enc_layers);
  kv.Set("n_dec_layers", n_dec_layers);
  kv.Set("d_ff", d_ff);
  kv.Set("d_prenet", d_prenet);
  kv.Set("d_spk_emb", d_spk_emb);
  kv.Set("d_lang_emb", d_lang_emb);
  kv.Set("n_mels", n_mels);
  kv.Set("max_frames", max_frames);
  kv.Set("n_phones", n_phones);
  kv.Set("dropout", dropout);
  return kv;
}

void ModelConfig::Validate() const {
  if (n_heads < 1) throw std::invalid_argument("n_heads must be >= 1");
  if (d_enc % n_heads != 0 || d_dec % n_heads != 0) {
    throw std::invalid_argument("d_enc and d_dec must be divisible by n_heads");
  }
  if (d_spk_emb != d_lang_emb) throw std::invalid_argument("d_spk_emb must equal d_lang_emb");
  if (n_enc_layers < 1 || n_dec_layers < 1) throw std::invalid_argument("need at least one layer each");
  if (n_mels < 1 || n_phones < 1 || max_frames < 1) throw std::invalid_argument("bad sizes in model config");
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("dropout must be in [0, 1)");
}

// ---- Construction ------------------------------------------------------------

TtsModel::TtsModel(const ModelConfig& config, std::vector<int> speaker_ids, std::vector<int> language_ids,
                   std::uint64_t seed)
    : config_(config), speaker_ids_(std::move(speaker_ids)), language_ids_(std::move(language_ids)) {
  config_.Validate();
  if (speaker_ids_.empty() || language_ids_.empty()) {
    throw std::invalid_argument("model needs at least one speaker and one language");
  }
  Build(seed);
}

TtsModel::Linear TtsModel::MakeLinear(const std::string& name, int in, int out, std::mt19937_64& rng) {
  Linear l;
  l.w = &params_.Add(name + ".w", RandomMatrix(in, out, 1.0 / std::sqrt(in), rng));
  l.b = &params_.Add(name + ".b", Mat::Zero(1, out));
  return l;
}

TtsModel::Norm TtsModel::MakeNorm(const std::string& name, int dim) {
  Norm n;
  n.gain = &params_.Add(name + ".gain", Mat::Ones(1, dim));
  n.bias = &params_.Add(name + ".bias", Mat::Zero(1, dim));
  return n;
}

TtsModel::Attention TtsModel::MakeAttention(const std::string& name, int d_q, int d_kv, int d_model,
                                            std::mt19937_64& rng) {
  Attention a;
  a.wq = &params_.Add(name + ".wq", RandomMatrix(d_q, d_model, 1.0 / std::sqrt(d_q), rng));
  a.wk = &params_.Add(name + ".wk", RandomMatrix(d_kv, d_model, 1.0 / std::sqrt(d_kv), rng));
  a.wv = &params_.Add(name + ".wv", RandomMatrix(d_kv, d_model, 1.0 / std::sqrt(d_kv), rng));
  a.wo = &params_.Add(name + ".wo", RandomMatrix(d_model, d_model, 1.0 / std::sqrt(d_model), rng));
  return a;
}

void TtsModel::Build(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const ModelConfig& c = config_;
  const int n_spk = static_cast<int>(speaker_ids_.size());
  const int n_lang = static_cast<int>(language_ids_.size());

  phone_table_ = &params_.Add("phone_table", RandomMatrix(c.n_phones, c.d_enc, 1.0, rng));
  speaker_table_ = &params_.Add("speaker_table", RandomMatrix(n_spk, c.d_spk_emb, 1.0, rng));
  language_table_ = &params_.Add("language_table", RandomMatrix(n_lang, c.d_lang_emb, 1.0, rng));
  speaker_net_ = MakeLinear("speaker_net", c.d_spk_emb, c.d_spk_emb, rng);
  language_net_ = MakeLinear("language_net", c.d_lang_emb, c.d_lang_emb, rng);
  spk_head_hidden_ = MakeLinear("mtl_speaker.hidden", c.d_spk_emb, c.d_spk_emb, rng);
  spk_head_out_ = MakeLinear("mtl_speaker.out", c.d_spk_emb, n_spk, rng);
  lang_head_hidden_ = MakeLinear("mtl_language.hidden", c.d_lang_emb, c.d_lang_emb, rng);
  lang_head_out_ = MakeLinear("mtl_language.out", c.d_lang_emb, n_lang, rng);

  lang_to_encoder_ = &params_.Add("encoder.lang_in", RandomMatrix(c.d_lang_emb, c.d_enc, 1.0 / std::sqrt(c.d_lang_emb), rng));
  for (int i = 0; i < c.n_enc_layers; ++i) {
    const std::string p = "encoder." + std::to_string(i);
    EncoderLayer l;
    l.ln_attn = MakeNorm(p + ".ln_attn", c.d_enc);
    l.attn = MakeAttention(p + ".attn", c.d_enc, c.d_enc, c.d_enc, rng);
    l.ln_ffn = MakeNorm(p + ".ln_ffn", c.d_enc);
    l.ff1 = MakeLinear(p + ".ff1", c.d_enc, c.d_ff, rng);
    l.ff2 = MakeLinear(p + ".ff2", c.d_ff, c.d_enc, rng);
    encoder_.push_back(l);
  }
  encoder_final_ = MakeNorm("encoder.final", c.d_enc);
  spk_inject_ = &params_.Add("inject.speaker", RandomMatrix(c.d_spk_emb, c.d_enc, 1.0 / std::sqrt(c.d_spk_emb), rng));
  lang_inject_ = &params_.Add("inject.language", RandomMatrix(c.d_lang_emb, c.d_enc, 1.0 / std::sqrt(c.d_lang_emb), rng));

  prenet1_ = MakeLinear("decoder.prenet1", c.n_mels, c.d_prenet, rng);
  prenet2_ = MakeLinear("decoder.prenet2", c.d_prenet, c.d_prenet, rng);
  decoder_in_ = MakeLinear("decoder.in", c.d_prenet + c.d_spk_emb, c.d_dec, rng);
  for (int i = 0; i < c.n_dec_layers; ++i) {
    const std::string p = "decoder." + std::to_string(i);
    DecoderLayer l;
    l.ln_self = MakeNorm(p + ".ln_self", c.d_dec);
    l.self_attn = MakeAttention(p + ".self_attn", c.d_dec, c.d_dec, c.d_dec, rng);
    l.ln_cross = MakeNorm(p + ".ln_cross", c.d_dec);
    l.cross_attn = MakeAttention(p + ".cross_attn", c.d_dec, c.d_enc, c.d_dec, rng);
    l.ln_ffn = MakeNorm(p + ".ln_ffn", c.d_dec);
    l.ff1 = MakeLinear(p + ".ff1", c.d_dec, c.d_ff, rng);
    l.ff2 = MakeLinear(p + ".ff2", c.d_ff, c.d_dec, rng);
    decoder_.push_back(l);
  }
  decoder_final_ = MakeNorm("decoder.final", c.d_dec);
  mel_head_ = MakeLinear("decoder.mel", c.d_dec, c.n_mels, rng);
  stop_head_ = MakeLinear("decoder.stop", c.d_dec, 1, rng);
}

// ---- Lookups -------------------------------------------------------------------

int TtsModel::SpeakerIndex(int speaker_id) const {
  auto it = std::find(speaker_ids_.begin(), speaker_ids_.end(), speaker_id);
  if (it == speaker_ids_.end()) {
    throw std::out_of_range("unknown speaker id " + std::to_string(speaker_id) +
                            " (extend the speaker table first)");
  }
  return static_cast<int>(it - speaker_ids_.begin());
}

int TtsModel::LanguageIndex(int lang_id) const {
  auto it = std::find(language_ids_.begin(), language_ids_.end(), lang_id);
  if (it == language_ids_.end()) throw std::out_of_range("unknown language id " + std::to_string(lang_id));
  return static_cast<int>(it - language_ids_.begin());
}

bool TtsModel::HasSpeaker(int speaker_id) const {
  return std::find(speaker_ids_.begin(), speaker_ids_.end(), speaker_id) != speaker_ids_.end();
}

bool TtsModel::HasCompleted(const std::string& stage) const {
  return std::find(completed_stages_.begin(), completed_stages_.end(), stage) != completed_stages_.end();
}

// ---- Building blocks -------------------------------------------------------------

Var TtsModel::Apply(Tape& tape, const Linear& l, Var x) {
  return Affine(x, tape.Param(*l.w), tape.Param(*l.b));
}

Var TtsModel::ApplyNorm(Tape& tape, const Norm& n, Var x) {
  return LayerNorm(x, tape.Param(*n.gain), tape.Param(*n.bias));
}

Var TtsModel::MultiHead(Tape& tape, const Attention& a, Var q_in, Var kv_in, const Mat* mask) {
  Var q = MatMul(q_in, tape.Param(*a.wq));
  Var k = MatMul(kv_in, tape.Param(*a.wk));
  Var v = MatMul(kv_in, tape.Param(*a.wv));
  const int d_model = static_cast<int>(q.cols());
  const int dh = d_model / config_.n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> heads;
  heads.reserve(static_cast<size_t>(config_.n_heads));
  for (int h = 0; h < config_.n_heads; ++h) {
    Var qh = config_.n_heads == 1 ? q : SliceCols(q, h * dh, dh);
    Var kh = config_.n_heads == 1 ? k : SliceCols(k, h * dh, dh);
    Var vh = config_.n_heads == 1 ? v : SliceCols(v, h * dh, dh);
    Var scores = Scale(MatMulT(qh, kh), scale);
    if (mask != nullptr) scores = AddConst(scores, *mask);
    heads.push_back(MatMul(SoftmaxRows(scores), vh));
  }
  Var cat = config_.n_heads == 1 ? heads[0] : ConcatCols(heads);
  return MatMul(cat, tape.Param(*a.wo));
}

Var TtsModel::FeedForward(Tape& tape, const Linear& l1, const Linear& l2, Var x, std::mt19937_64* rng) {
  Var h = Relu(Apply(tape, l1, x));
  h = Dropout(h, config_.dropout, rng);
  return Apply(tape, l2, h);
}

// ---- Conditioning --------------------------------------------------------------------

Var TtsModel::SpeakerNetwork(Tape& tape, int speaker_id) {
  const int row = SpeakerIndex(speaker_id);
  Var e = GatherRows(tape.Param(*speaker_table_), std::span<const int>(&row, 1));
  return Tanh(Apply(tape, speaker_net_, e));
}

Var TtsModel::LanguageNetwork(Tape& tape, int lang_id) {
  const int row = LanguageIndex(lang_id);
  Var e = GatherRows(tape.Param(*language_table_), std::span<const int>(&row, 1));
  return Tanh(Apply(tape, language_net_, e));
}

ConditioningVectors TtsModel::Condition(Tape& tape, int speaker_id, int lang_id) {
  return {SpeakerNetwork(tape, speaker_id), LanguageNetwork(tape, lang_id)};
}

MtlLogits TtsModel::MtlHeads(Tape& tape, Var s_cond, Var l_cond) {
  if (s_cond.cols() != config_.d_spk_emb || l_cond.cols() != config_.d_lang_emb) {
    throw std::invalid_argument("MtlHeads: conditioning vector has the wrong width");
  }
  Var spk = Apply(tape, spk_head_out_, Relu(Apply(tape, spk_head_hidden_, s_cond)));
  Var lang = Apply(tape, lang_head_out_, Relu(Apply(tape, lang_head_hidden_, l_cond)));
  return {spk, lang};
}

// ---- Encoder / decoder ------------------------------------------------------------

Var TtsModel::Encode(Tape& tape, std::span<const int> phones, Var l_cond, int n_valid,
                     std::mt19937_64* dropout_rng) {
  if (phones.empty()) throw std::invalid_argument("Encode: empty phone sequence");
  const int n = static_cast<int>(phones.size());
  for (int p : phones) {
    if (p < 0 || p >= config_.n_phones) throw std::out_of_range("Encode: phone id " + std::to_string(p));
  }
  if (n_valid < 0) n_valid = n;
  if (n_valid < 1 || n_valid > n) throw std::invalid_argument("Encode: bad n_valid");

  Var x = GatherRows(tape.Param(*phone_table_), phones);
  x = AddConst(x, PositionalEncoding(n, config_.d_enc));
  x = AddRow(x, MatMul(l_cond, tape.Param(*lang_to_encoder_)));
  x = Dropout(x, config_.dropout, dropout_rng);

  Mat mask;
  const Mat* mask_ptr = nullptr;
  if (n_valid < n) {
    mask = Mat::Zero(n, n);
    mask.rightCols(n - n_valid).setConstant(kMaskValue);
    mask_ptr = &mask;
  }
  for (const EncoderLayer& l : encoder_) {
    Var h = ApplyNorm(tape, l.ln_attn, x);
    x = Add(x, Dropout(MultiHead(tape, l.attn, h, h, mask_ptr), config_.dropout, dropout_rng));
    x = Add(x, FeedForward(tape, l.ff1, l.ff2, ApplyNorm(tape, l.ln_ffn, x), dropout_rng));
  }
  return ApplyNorm(tape, encoder_final_, x);
}

Var TtsModel::ConditionInjection(Tape& tape, Var encoder_states, Var s_cond, Var l_cond) {
  Var out = AddRow(encoder_states, MatMul(s_cond, tape.Param(*spk_inject_)));
  return AddRow(out, MatMul(l_cond, tape.Param(*lang_inject_)));
}

DecoderOutput TtsModel::DecodeTeacherForced(Tape& tape, Var memory, const Mat& mel_inputs, Var s_cond,
                                            Var /*l_cond*/, std::mt19937_64* dropout_rng) {
  const int t_len = static_cast<int>(mel_inputs.rows());
  if (t_len < 1) throw std::invalid_argument("decoder needs at least one input frame");
  if (t_len > config_.max_frames) {
    throw std::invalid_argument("decoder input has " + std::to_string(t_len) + " frames, max_frames is " +
                                std::to_string(config_.max_frames));
  }
  if (mel_inputs.cols() != config_.n_mels) throw std::invalid_argument("decoder input has wrong n_mels");

  Var p = Relu(Apply(tape, prenet1_, tape.Constant(mel_inputs)));
  p = Dropout(p, config_.dropout, dropout_rng);
  p = Relu(Apply(tape, prenet2_, p));
  p = Dropout(p, config_.dropout, dropout_rng);
  const Var parts[] = {p, RepeatRow(s_cond, t_len)};
  Var y = Apply(tape, decoder_in_, ConcatCols(parts));
  y = AddConst(y, PositionalEncoding(t_len, config_.d_dec));

  Mat causal = Mat::Zero(t_len, t_len);
  for (int i = 0; i < t_len; ++i) {
    for (int j = i + 1; j < t_len; ++j) causal(i, j) = kMaskValue;
  }
  for (const DecoderLayer& l : decoder_) {
    Var h = ApplyNorm(tape, l.ln_self, y);
    y = Add(y, Dropout(MultiHead(tape, l.self_attn, h, h, &causal), config_.dropout, dropout_rng));
    h = ApplyNorm(tape, l.ln_cross, y);
    y = Add(y, Dropout(MultiHead(tape, l.cross_attn, h, memory, nullptr), config_.dropout, dropout_rng));
    y = Add(y, FeedForward(tape, l.ff1, l.ff2, ApplyNorm(tape, l.ln_ffn, y), dropout_rng));
  }
  y = ApplyNorm(tape, decoder_final_, y);
  return {Apply(tape, mel_head_, y), Apply(tape, stop_head_, y)};
}

TtsForward TtsModel::Forward(Tape& tape, std::span<const int> phones, int speaker_id, int lang_id,
                             const Mat& mel_inputs, std::mt19937_64* dropout_rng) {
  TtsForward f;
  f.cond = Condition(tape, speaker_id, lang_id);
  Var enc = Encode(tape, phones, f.cond.l_cond, -1, dropout_rng);
  f.memory = ConditionInjection(tape, enc, f.cond.s_cond, f.cond.l_cond);
  f.out = DecodeTeacherForced(tape, f.memory, mel_inputs, f.cond.s_cond, f.cond.l_cond, dropout_rng);
  return f;
}

InferResult TtsModel::Infer(std::span<const int> phones, int speaker_id, int lang_id, int max_frames) {
  if (max_frames < 1) throw std::invalid_argument("Infer: max_frames must be positive");
  max_frames = std::min(max_frames, config_.max_frames);
  Mat memory, s_cond, l_cond;
  {
    Tape tape(false);
    ConditioningVectors cond = Condition(tape, speaker_id, lang_id);
    Var enc = Encode(tape, phones, cond.l_cond);
    memory = ConditionInjection(tape, enc, cond.s_cond, cond.l_cond).value();
    s_cond = cond.s_cond.value();
    l_cond = cond.l_cond.value();
  }
  InferResult result;
  Mat inputs = Mat::Zero(1, config_.n_mels);
  std::vector<RowVec> frames;
  for (int t = 0; t < max_frames; ++t) {
    Tape tape(false);
    DecoderOutput out = DecodeTeacherForced(tape, tape.Constant(memory), inputs, tape.Constant(s_cond),
                                            tape.Constant(l_cond));
    RowVec frame = out.mel.value().row(t);
    const double stop_logit = out.stop.value()(t, 0);
    frames.push_back(frame);
    if (stop_logit > 0.0) break;  // sigmoid(z) > 0.5
    if (t + 1 == max_frames) {
      result.hit_max_frames = true;
      break;
    }
    inputs.conservativeResize(t + 2, Eigen::NoChange);
    inputs.row(t + 1) = frame;
  }
  result.mel = Mat(static_cast<Eigen::Index>(frames.size()), config_.n_mels);
  for (size_t i = 0; i < frames.size(); ++i) result.mel.row(static_cast<Eigen::Index>(i)) = frames[i];
  return result;
}

Mat TtsModel::ShiftRight(const Mat& mel) {
  Mat out = Mat::Zero(mel.rows(), mel.cols());
  if (mel.rows() > 1) out.bottomRows(mel.rows() - 1) = mel.topRows(mel.rows() - 1);
  return out;
}

// ---- Speaker extension / serialisation ---------------------------------------------------

void TtsModel::AppendSpeaker(int speaker_id) {
  if (HasSpeaker(speaker_id)) throw std::invalid_argument("speaker id " + std::to_string(speaker_id) + " already exists");
  Mat& table = speaker_table_->value;
  const RowVec mean_row = table.colwise().mean();
  table.conservativeResize(table.rows() + 1, Eigen::NoChange);
  table.row(table.rows() - 1) = mean_row;
  speaker_table_->ZeroGrad();

  Mat& w = spk_head_out_.w->value;
  const Eigen::VectorXd mean_col = w.rowwise().mean();
  w.conservativeResize(Eigen::NoChange, w.cols() + 1);
  w.col(w.cols() - 1) = mean_col;
  spk_head_out_.w->ZeroGrad();
  Mat& b = spk_head_out_.b->value;
  const double mean_b = b.mean();
  b.conservativeResize(Eigen::NoChange, b.cols() + 1);
  b(0, b.cols() - 1) = mean_b;
  spk_head_out_.b->ZeroGrad();

  speaker_ids_.push_back(speaker_id);
}

Checkpoint TtsModel::ToCheckpoint() const {
  Checkpoint ckpt;
  ckpt.kind = "tts";
  ckpt.meta = config_.ToKv();
  ckpt.meta.Set("speaker_ids", JoinIds(speaker_ids_));
  ckpt.meta.Set("language_ids", JoinIds(language_ids_));
  ckpt.meta.Set("completed_stages", JoinStrings(completed_stages_));
  AppendParams(params_, ckpt);
  return ckpt;
}

TtsModel TtsModel::FromCheckpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != "tts") throw std::runtime_error("checkpoint kind is '" + ckpt.kind + "', expected 'tts'");
  TtsModel model(ModelConfig::FromKv(ckpt.meta), ckpt.meta.GetIntList("speaker_ids", {}),
                 ckpt.meta.GetIntList("language_ids", {}), 0);
  model.completed_stages_ = SplitStrings(ckpt.meta.GetString("completed_stages", ""));
  RestoreParams(ckpt, model.params_);
  return model;
}

}  // namespace xtts
