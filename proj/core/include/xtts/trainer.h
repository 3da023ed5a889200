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

// Losses, samplers and the staged training loop.
//
// Stages:
//   baseline        mel MSE + stop BCE
//   mtl             baseline + speaker/language CE on the conditioning heads
//   spk_classifier  x-vector speaker CE on corpus mels
//   joint           mtl (or baseline) losses every step; on every k-th step
//                   additionally lambda_cross * L_cross, where
//                     L_cross = |xvec(o_s^l) - xvec(mel'')|_2
//                   and mel'' is a teacher-forced pass whose decoder input is a
//                   free-running synthesis of speaker s in a random l' != l.
//                   The x-vector enters L_cross frozen.

#ifndef XTTS_TRAINER_H_
#define XTTS_TRAINER_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "xtts/autodiff.h"
#include "xtts/corpus.h"
#include "xtts/kvconfig.h"
#include "xtts/tts_model.h"
#include "xtts/xvector.h"

namespace xtts {

enum class Stage { kBaseline, kMtl, kSpkClassifier, kJoint };

std::string StageName(Stage stage);
Stage ParseStage(const std::string& name);

/// Raised when a stage is requested before the stages it depends on.
class PrerequisiteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  int batch_size = 8;
  int steps = 1000;
  double lr = 1e-3;
  // Step at which exponential decay begins; < 0 means 40% of `steps`.
  int decay_start = -1;
  double decay_rate = 0.998;
  double min_lr = 1e-5;
  double lambda_mel = 1.0;
  double lambda_stop = 1.0;
  double lambda_spk_mtl = 1.0;
  double lambda_lang_mtl = 1.0;
  double lambda_cross = 0.1;
  int joint_period = 20;
  // Number of (s, l, l') draws summed into L_cross on a joint step.
  int cross_draws = 1;
  // Keep training the x-vector classifier on real mels during the joint stage.
  bool joint_trains_xvector = true;
  // Joint-stage TTS losses include the MTL heads ("+MTL+Joint").
  bool joint_with_mtl = true;
  double stop_pos_weight = 5.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 1.0;
  // Plateau check on a fixed validation batch; 0 disables it.
  int patience = 0;
  int val_interval = 50;
  // Speaker extension: probability of drawing the new speaker when the
  // balanced sampler lands on the new speaker's language.
  double p_new = 0.3;
  int checkpoint_interval = 0;
  // Resume point: steps 1..start_step are skipped (sampler fast-forwarded,
  // lr schedule continued). Optimizer moments restart from zero.
  int start_step = 0;
  std::uint64_t seed = 1;

  static TrainConfig FromKv(const KvConfig& kv, const std::string& prefix = "");
  /// Reads `prefix`-qualified keys on top of `base`.
  static TrainConfig FromKv(const KvConfig& kv, const std::string& prefix, const TrainConfig& base);
  KvConfig ToKv() const;
  void Validate() const;
  int EffectiveDecayStart() const;
  double LearningRate(int step) const;
};

// ---- Losses ---------------------------------------------------------------

struct TtsLossTerms {
  Var mel;   // mean squared error over all frames and bins
  Var stop;  // per-frame BCE, positive label on the final frame only
};

TtsLossTerms TtsLoss(Var mel_pred, Var stop_logits, const Mat& target, double stop_pos_weight);

struct MtlLossTerms {
  Var speaker;
  Var language;
};

/// Cross-entropy of both heads against class indices.
MtlLossTerms MtlLoss(const MtlLogits& logits, int speaker_index, int language_index);

/// Named components of one step plus their weighted sum.
struct LossBundle {
  double total = 0.0;
  std::vector<std::pair<std::string, double>> components;  // name, unweighted value
  std::vector<std::pair<std::string, double>> weights;

  void Add(const std::string& name, double weight, double value);
  std::optional<double> Get(const std::string& name) const;
};

// ---- Data ----------------------------------------------------------------

/// Corpus utterances with silence trimmed to the configured frame count.
struct TrainingSet {
  std::vector<Utterance> utterances;  // parallel to corpus.utterances
  std::vector<int> train;             // indices of the train split
  std::vector<int> held_out;          // indices of the "new" split
  std::vector<int> languages;

  static TrainingSet FromCorpus(const Corpus& corpus);
  /// Train-split indices of one language.
  std::vector<int> OfLanguage(int lang) const;
  /// Indices of one speaker, any split.
  std::vector<int> OfSpeaker(int speaker) const;
  std::vector<int> TrainLanguagesOf(const std::vector<int>& items) const;
};

/// Two-stage sampler: a language uniformly, then an utterance uniformly
/// within it. An optional priority group is drawn with probability p when
/// the chosen language matches the group's language.
class LanguageBalancedSampler {
 public:
  /// Draws from `items`; item_langs[i] is the language of items[i].
  LanguageBalancedSampler(const std::vector<int>& items, const std::vector<int>& item_langs,
                          std::uint64_t seed);
  /// Items are 0..n-1 with the given languages.
  LanguageBalancedSampler(const std::vector<int>& item_langs, std::uint64_t seed);
  void SetPriorityGroup(int lang, std::vector<int> items, double p);
  int Next();
  const std::vector<int>& languages() const { return langs_; }

 private:
  std::vector<int> langs_;
  std::vector<std::vector<int>> by_lang_;
  std::mt19937_64 rng_;
  int priority_lang_ = -1;
  std::vector<int> priority_items_;
  double priority_p_ = 0.0;
};

// ---- Cross-lingual loss --------------------------------------------------

struct CrossLingualSample {
  int speaker_id = 0;
  int source_lang = 0;
  int target_lang = 0;
  std::vector<int> phones;  // drawn from the target language's training set
  Mat generated;            // free-running synthesis, no gradient
  Mat teacher_input;        // ShiftRight(generated)
  bool hit_max_frames = false;
};

/// Samples l' != l uniformly, a phone sequence from l''s training utterances,
/// and runs free-running synthesis of speaker s in l'.
CrossLingualSample GenerateCrossLingual(TtsModel& model, const TrainingSet& data, int speaker_id,
                                        int source_lang, std::mt19937_64& rng);

/// |xvec(reference) - xvec(synthesized)|_2 with the x-vector frozen.
Var CrossLingualDistance(Tape& tape, XVectorModel& xvec, Var reference_mel, Var synthesized_mel);

/// Teacher-forced pass on the generated mel (with gradient), then the frozen
/// x-vector distance to the reference recording. Returns nullopt when the
/// generated mel is shorter than the x-vector receptive field.
std::optional<Var> CrossLingualLoss(Tape& tape, TtsModel& model, XVectorModel& xvec, const Utterance& reference,
                                    const CrossLingualSample& sample);

// ---- Training loop -------------------------------------------------------

struct StepRecord {
  int step = 0;
  double lr = 0.0;
  LossBundle loss;
  std::optional<double> xvec_ce;  // classifier loss (separate model)
  double seconds = 0.0;
};

struct StageReport {
  Stage stage = Stage::kBaseline;
  std::vector<StepRecord> steps;
  std::string checkpoint;
  bool early_stopped = false;

  int CrossSteps() const;
  /// Line-delimited: step, lr, total, then name=value per component.
  /// Timing is excluded so identical runs serialise identically.
  std::string ToText() const;
};

/// Optional callbacks, e.g. for periodic checkpoints.
struct TrainHooks {
  std::function<void(int step)> on_checkpoint;
};

/// Runs one stage. `tts` is required for every stage except spk_classifier;
/// `xvec` is required for spk_classifier and joint.
StageReport TrainStage(Stage stage, TtsModel* tts, XVectorModel* xvec, const TrainingSet& data,
                       const TrainConfig& config, const TrainHooks* hooks = nullptr);

/// Adds `speaker_id` (utterances in split "new") to both models and refines
/// the whole TTS model on a language-balanced stream that includes the new
/// speaker. `refine` is the stage whose losses are used (baseline, mtl or
/// joint).
StageReport ExtendSpeaker(TtsModel& tts, XVectorModel* xvec, const TrainingSet& data, int speaker_id,
                          Stage refine, const TrainConfig& config);

}  // namespace xtts

#endif  // XTTS_TRAINER_H_
