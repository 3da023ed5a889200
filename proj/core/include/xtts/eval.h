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

// Objective speaker-similarity evaluation.
//
// For every (speaker, target language) pair of a plan, a fixed set of texts
// is synthesized and each synthesis is scored as
//
//   cosine_distance(mean_r embed(reference_r), embed(synthesis))
//
// where the references are the speaker's real recordings. Pairs whose target
// is the speaker's native language are intra-lingual, all others
// cross-lingual.

#ifndef XTTS_EVAL_H_
#define XTTS_EVAL_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xtts/corpus.h"
#include "xtts/trainer.h"
#include "xtts/tts_model.h"
#include "xtts/xvector.h"

namespace xtts {

enum class ScorerKind { kOracle, kIndependentXvector, kBoth };

std::string ScorerKindName(ScorerKind kind);
ScorerKind ParseScorerKind(const std::string& name);

struct EvalPair {
  int speaker_id = 0;
  int lang_id = 0;
};

struct EvalPlan {
  std::vector<EvalPair> pairs;
  int utterances_per_pair = 20;
  ScorerKind scorer = ScorerKind::kOracle;
  std::uint64_t seed = 1;

  /// Every listed speaker paired with every language.
  static EvalPlan AllPairs(const std::vector<int>& speakers, const std::vector<int>& languages);
  /// Throws std::invalid_argument on unknown languages/speakers or an empty plan.
  void Validate(const Corpus& corpus) const;
  /// Canonical text of pairs, utterance count and seed (the scorer is excluded).
  std::string Fingerprint() const;
  /// Deterministic phone sequence for text `index` of a pair.
  std::vector<int> Text(const Corpus& corpus, const EvalPair& pair, int index) const;
};

/// Maps a mel to a speaker embedding.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::string Name() const = 0;
  virtual int MinFrames() const = 0;
  /// `phones` and `lang_id` describe what the mel says.
  virtual RowVec Embed(const Mat& mel, std::span<const int> phones, int lang_id) = 0;
};

/// Analytic speaker vector of the synthetic corpus.
class OracleScorer : public Scorer {
 public:
  explicit OracleScorer(const Corpus& corpus) : corpus_(corpus) {}
  std::string Name() const override { return "oracle"; }
  int MinFrames() const override { return 1; }
  RowVec Embed(const Mat& mel, std::span<const int> phones, int lang_id) override;

 private:
  const Corpus& corpus_;
};

/// Embeddings of a separately trained x-vector model.
class XVectorScorer : public Scorer {
 public:
  explicit XVectorScorer(XVectorModel& model) : model_(model) {}
  std::string Name() const override { return "independent_xvector"; }
  int MinFrames() const override { return model_.config().MinFrames(); }
  RowVec Embed(const Mat& mel, std::span<const int> phones, int lang_id) override;

 private:
  XVectorModel& model_;
};

/// cosine_distance(mean of `references`, `synthesized`).
double ScorePair(std::span<const RowVec> references, const RowVec& synthesized);

/// Scores one synthesis against reference utterances. Returns nullopt when the
/// synthesis is too short for the scorer or carries no usable evidence.
std::optional<double> ScorePair(Scorer& scorer, std::span<const Utterance> references, const Mat& synthesized,
                                std::span<const int> phones, int lang_id);

struct PairResult {
  int speaker_id = 0;
  int lang_id = 0;
  int native_lang = 0;
  int n_scored = 0;
  int n_missing = 0;
  int n_hit_max = 0;
  std::optional<double> mean_distance;

  bool intra() const { return lang_id == native_lang; }
};

struct LanguageAggregate {
  int lang_id = 0;
  std::optional<double> intra;  // speakers native to lang_id
  std::optional<double> cross;  // speakers from other languages
  int n_intra = 0;
  int n_cross = 0;
};

struct SimilarityReport {
  std::string system;
  std::string scorer;
  std::uint64_t seed = 0;
  std::string plan;  // EvalPlan::Fingerprint()
  std::vector<PairResult> pairs;

  std::vector<LanguageAggregate> ByLanguage() const;
  /// Mean of pair means over intra (or cross) pairs; nullopt when none.
  std::optional<double> IntraMean() const;
  std::optional<double> CrossMean() const;
  std::optional<double> CrossMeanOf(int speaker_id) const;
  std::optional<double> IntraMeanExcluding(int speaker_id) const;

  /// Tab-separated, '#' header lines; round-trips through ParseReport.
  std::string ToTsv() const;
  /// Aligned per-language table.
  std::string ToTable() const;
};

SimilarityReport ParseReport(const std::string& tsv);

/// Real recordings of every speaker, used as references. Pass the trimmed
/// utterances the models were trained on.
struct EvalContext {
  const Corpus* corpus = nullptr;
  std::span<const Utterance> utterances;
  XVectorModel* independent_xvector = nullptr;
};

/// Synthesizes every text of the plan once and scores it with each scorer the
/// plan asks for. Returns one report per scorer (oracle first).
std::vector<SimilarityReport> RunEval(TtsModel& model, const EvalPlan& plan, const EvalContext& context,
                                      const std::string& system);

struct ComparisonRow {
  std::string label;
  std::vector<std::optional<double>> values;  // one per system
  std::vector<std::optional<double>> deltas;  // value - first system's value
  int best = -1;                              // index of the smallest value
};

struct Comparison {
  std::vector<std::string> systems;
  std::string scorer;
  std::vector<ComparisonRow> rows;

  std::string ToText() const;
  /// Markdown table; the best value per row is bold.
  std::string ToMarkdown() const;
};

/// Side-by-side table of reports that share plan and scorer.
Comparison CompareSystems(const std::vector<SimilarityReport>& reports);

}  // namespace xtts

#endif  // XTTS_EVAL_H_
