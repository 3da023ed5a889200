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

// Experiment configuration and the end-to-end system comparison:
//
//   corpus -> Baseline            (baseline stage)
//          -> +MTL                (mtl stage, same initialisation)
//          -> x-vector            (spk_classifier stage)
//          -> +MTL+Joint          (+MTL continued with the joint stage)
//          -> independent scorer  (x-vector with its own seed, trained alone)
//   then evaluation of all three systems and, optionally, new-speaker
//   extension of Baseline and +MTL+Joint.
//
// Config keys (flat):
//   seed
//   corpus.<CorpusConfig key>
//   model.<ModelConfig key>            model.preset = desk | full
//   xvector.<XVectorConfig key>        xvector.preset = desk | reference
//   train.<stage>.<TrainConfig key>    stage = baseline | mtl | spk_classifier | joint | extend
//   eval.utterances_per_pair, eval.scorer, eval.seed
//   stages                             comma-separated stage order

#ifndef XTTS_EXPERIMENT_H_
#define XTTS_EXPERIMENT_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "xtts/corpus.h"
#include "xtts/eval.h"
#include "xtts/kvconfig.h"
#include "xtts/trainer.h"
#include "xtts/tts_model.h"
#include "xtts/xvector.h"

namespace xtts {

struct ExperimentConfig {
  std::uint64_t seed = 1;
  CorpusConfig corpus;
  ModelConfig model;
  XVectorConfig xvector;
  TrainConfig baseline, mtl, spk_classifier, joint, extend;
  int eval_utterances_per_pair = 20;
  ScorerKind eval_scorer = ScorerKind::kBoth;
  std::uint64_t eval_seed = 7;
  std::vector<Stage> stages = {Stage::kBaseline, Stage::kMtl, Stage::kSpkClassifier, Stage::kJoint};

  /// Desk-scale defaults used by the acceptance experiment.
  static ExperimentConfig Desk();
  /// Applies `kv` on top of Desk().
  static ExperimentConfig FromKv(const KvConfig& kv);
  KvConfig ToKv() const;
  /// Throws std::invalid_argument on invalid sub-configs or a stage order
  /// that puts joint before spk_classifier or before any TTS stage.
  void Validate() const;

  /// Stage config with its seed mixed with the global seed.
  TrainConfig ForStage(Stage stage) const;
  TrainConfig ForExtension() const;
  EvalPlan Plan(const Corpus& corpus) const;
};

/// Named seeds derived from the global seed.
struct ExperimentSeeds {
  std::uint64_t corpus, tts_init, xvec_init, scorer_init, scorer_train, held_out;
  static ExperimentSeeds From(std::uint64_t seed);
};

TtsModel NewTtsModel(const ModelConfig& config, const Corpus& corpus, std::uint64_t seed);
XVectorModel NewXVectorModel(const XVectorConfig& config, const Corpus& corpus, std::uint64_t seed);
TtsModel CloneModel(const TtsModel& model);
XVectorModel CloneModel(const XVectorModel& model);

struct MtlAccuracy {
  double speaker = 0.0;
  double language = 0.0;
};

/// Argmax accuracy of the MTL heads over the model's own speaker and language ids.
MtlAccuracy EvaluateMtlHeads(TtsModel& model);

/// Speaker-classification accuracy of an x-vector model.
double XVectorAccuracy(XVectorModel& model, std::span<const Utterance> utterances);

/// Fresh trimmed renders of every train speaker, unseen in training.
std::vector<Utterance> RenderHeldOut(const Corpus& corpus, int per_speaker, std::uint64_t seed);

struct ExtensionResult {
  int new_speaker = -1;
  // Evaluated on the new speaker in every language plus every existing
  // speaker in its native language.
  SimilarityReport baseline;
  SimilarityReport joint;
};

struct ComparisonRun {
  std::uint64_t seed = 0;
  // Baseline, +MTL, +MTL+Joint, in that order.
  std::vector<SimilarityReport> oracle;
  std::vector<SimilarityReport> xvector;
  MtlAccuracy mtl_accuracy;
  double xvec_accuracy = 0.0;    // held-out renders, jointly trained model
  double scorer_accuracy = 0.0;  // held-out renders, independent scorer
  std::vector<StageReport> traces;
  std::optional<ExtensionResult> extension;
  double seconds = 0.0;

  std::string Summary() const;
};

using ProgressFn = std::function<void(const std::string&)>;

/// Runs the full comparison for `config.seed`.
ComparisonRun RunComparison(const ExperimentConfig& config, bool with_extension, const ProgressFn& progress = {});

inline const std::vector<std::string>& SystemLabels() {
  static const std::vector<std::string> labels = {"Baseline", "+MTL", "+MTL+Joint"};
  return labels;
}

}  // namespace xtts

#endif  // XTTS_EXPERIMENT_H_
