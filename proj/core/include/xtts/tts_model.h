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

// Multilingual transformer TTS with speaker and language conditioning
// networks and auxiliary speaker/language classification heads.
//
// Data flow for one utterance:
//
//   phones --embed+pos+lang--> encoder --(+ proj(s_cond) + proj(l_cond))--> memory
//   mel_in --prenet--> [.., s_cond] --> decoder(masked self-attn, cross-attn) --> mel, stop
//
// The decoder input is the target mel shifted right by one frame with a zero
// first frame.

#ifndef XTTS_TTS_MODEL_H_
#define XTTS_TTS_MODEL_H_

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "xtts/autodiff.h"
#include "xtts/checkpoint.h"
#include "xtts/kvconfig.h"

namespace xtts {

struct ModelConfig {
  int d_enc = 64;
  int d_dec = 64;
  int n_heads = 2;
  int n_enc_layers = 2;
  int n_dec_layers = 2;
  int d_ff = 128;
  int d_prenet = 64;
  int d_spk_emb = 16;
  int d_lang_emb = 16;
  int n_mels = 20;
  int max_frames = 80;
  int n_phones = 32;
  double dropout = 0.0;

  /// Desk-scale defaults.
  static ModelConfig Desk() { return {}; }
  /// Reference dimensions of the full-size system (512/768/128).
  static ModelConfig FullScale();
  static ModelConfig FromKv(const KvConfig& kv);
  KvConfig ToKv() const;
  void Validate() const;
};

struct ConditioningVectors {
  Var s_cond;  // 1 x d_spk_emb
  Var l_cond;  // 1 x d_lang_emb
};

struct MtlLogits {
  Var speaker;   // 1 x n_speakers
  Var language;  // 1 x n_languages
};

struct DecoderOutput {
  Var mel;   // T x n_mels
  Var stop;  // T x 1 logits
};

struct InferResult {
  Mat mel;
  bool hit_max_frames = false;
};

/// Everything a single teacher-forced pass produces.
struct TtsForward {
  ConditioningVectors cond;
  Var memory;
  DecoderOutput out;
};

class TtsModel {
 public:
  TtsModel(const ModelConfig& config, std::vector<int> speaker_ids, std::vector<int> language_ids,
           std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  const std::vector<int>& speaker_ids() const { return speaker_ids_; }
  const std::vector<int>& language_ids() const { return language_ids_; }
  int SpeakerIndex(int speaker_id) const;
  int LanguageIndex(int lang_id) const;
  bool HasSpeaker(int speaker_id) const;

  // Training stages this model has completed, in order.
  std::vector<std::string>& completed_stages() { return completed_stages_; }
  const std::vector<std::string>& completed_stages() const { return completed_stages_; }
  bool HasCompleted(const std::string& stage) const;

  Var SpeakerNetwork(Tape& tape, int speaker_id);
  Var LanguageNetwork(Tape& tape, int lang_id);
  ConditioningVectors Condition(Tape& tape, int speaker_id, int lang_id);
  MtlLogits MtlHeads(Tape& tape, Var s_cond, Var l_cond);

  /// Encoder over `phones`. Positions >= n_valid are padding: they are masked
  /// as attention keys so they cannot influence the real positions. n_valid < 0
  /// means no padding.
  Var Encode(Tape& tape, std::span<const int> phones, Var l_cond, int n_valid = -1,
             std::mt19937_64* dropout_rng = nullptr);
  Var ConditionInjection(Tape& tape, Var encoder_states, Var s_cond, Var l_cond);
  DecoderOutput DecodeTeacherForced(Tape& tape, Var memory, const Mat& mel_inputs, Var s_cond,
                                    Var l_cond, std::mt19937_64* dropout_rng = nullptr);

  /// Full teacher-forced pass: conditioning, encoder, injection and decoder.
  TtsForward Forward(Tape& tape, std::span<const int> phones, int speaker_id, int lang_id,
                     const Mat& mel_inputs, std::mt19937_64* dropout_rng = nullptr);

  /// Free-running autoregressive synthesis. Stops after the first frame whose
  /// stop probability exceeds 0.5, or at max_frames (flagged).
  InferResult Infer(std::span<const int> phones, int speaker_id, int lang_id, int max_frames);

  /// Appends a speaker whose table row (and MTL speaker-head column) is the
  /// mean of the existing ones. Throws on a duplicate id.
  void AppendSpeaker(int speaker_id);

  Checkpoint ToCheckpoint() const;
  static TtsModel FromCheckpoint(const Checkpoint& ckpt);

  /// [zeros; mel[0 .. T-2]]
  static Mat ShiftRight(const Mat& mel);

 private:
  struct Linear {
    Parameter* w = nullptr;
    Parameter* b = nullptr;
  };
  struct Norm {
    Parameter* gain = nullptr;
    Parameter* bias = nullptr;
  };
  struct Attention {
    Parameter* wq = nullptr;
    Parameter* wk = nullptr;
    Parameter* wv = nullptr;
    Parameter* wo = nullptr;
  };
  struct EncoderLayer {
    Norm ln_attn, ln_ffn;
    Attention attn;
    Linear ff1, ff2;
  };
  struct DecoderLayer {
    Norm ln_self, ln_cross, ln_ffn;
    Attention self_attn, cross_attn;
    Linear ff1, ff2;
  };

  void Build(std::uint64_t seed);
  Linear MakeLinear(const std::string& name, int in, int out, std::mt19937_64& rng);
  Norm MakeNorm(const std::string& name, int dim);
  Attention MakeAttention(const std::string& name, int d_q, int d_kv, int d_model, std::mt19937_64& rng);

  Var Apply(Tape& tape, const Linear& l, Var x);
  Var ApplyNorm(Tape& tape, const Norm& n, Var x);
  Var MultiHead(Tape& tape, const Attention& a, Var q_in, Var kv_in, const Mat* mask);
  Var FeedForward(Tape& tape, const Linear& l1, const Linear& l2, Var x, std::mt19937_64* rng);

  ModelConfig config_;
  std::vector<int> speaker_ids_;
  std::vector<int> language_ids_;
  std::vector<std::string> completed_stages_;
  ParamSet params_;

  Parameter* phone_table_ = nullptr;
  Parameter* speaker_table_ = nullptr;
  Parameter* language_table_ = nullptr;
  Linear speaker_net_, language_net_;
  Linear spk_head_hidden_, spk_head_out_;
  Linear lang_head_hidden_, lang_head_out_;
  Parameter* lang_to_encoder_ = nullptr;
  Parameter* spk_inject_ = nullptr;
  Parameter* lang_inject_ = nullptr;
  std::vector<EncoderLayer> encoder_;
  Norm encoder_final_;
  Linear prenet1_, prenet2_, decoder_in_;
  std::vector<DecoderLayer> decoder_;
  Norm decoder_final_;
  Linear mel_head_, stop_head_;
};

/// Sinusoidal positional encoding, [n x d].
Mat PositionalEncoding(int n, int d);

}  // namespace xtts

#endif  // XTTS_TTS_MODEL_H_
