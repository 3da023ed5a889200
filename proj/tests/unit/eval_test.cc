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

#include "xtts/eval.h"

#include <gtest/gtest.h>

#include <cmath>

#include "test_util.h"
#include "xtts/experiment.h"

namespace xtts {
namespace {

using testing::RandomRow;

TEST(ScorePair, IdentityIsZeroAndAntipodalIsTwo) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const RowVec v = RandomRow(10, rng);
    const std::vector<RowVec> refs = {v, 2.0 * v};
    EXPECT_NEAR(ScorePair(refs, v), 0.0, 1e-12);
    EXPECT_NEAR(ScorePair(refs, -v), 2.0, 1e-12);
  }
  EXPECT_THROW(ScorePair(std::vector<RowVec>{}, RowVec::Ones(2)), std::invalid_argument);
}

TEST(ScorePair, UsesTheMeanReference) {
  RowVec a(2), b(2), s(2);
  a << 1.0, 0.0;
  b << 0.0, 1.0;
  s << 1.0, 1.0;
  const std::vector<RowVec> refs = {a, b};
  EXPECT_NEAR(ScorePair(refs, s), 0.0, 1e-12);
}

TEST(ScorerKind, NamesRoundTrip) {
  for (ScorerKind k : {ScorerKind::kOracle, ScorerKind::kIndependentXvector, ScorerKind::kBoth}) {
    EXPECT_EQ(ParseScorerKind(ScorerKindName(k)), k);
  }
  EXPECT_EQ(ParseScorerKind("xvector"), ScorerKind::kIndependentXvector);
  EXPECT_ANY_THROW(ParseScorerKind("mos"));
}

class EvalTest : public ::testing::Test {
 protected:
  static CorpusConfig Config() {
    CorpusConfig c;
    c.n_languages = 2;
    c.speakers_per_language = 2;
    c.phones_per_language = 4;
    c.n_mels = 8;
    c.utterances_per_language = 8;
    return c;
  }
  static ModelConfig Model() {
    ModelConfig m;
    m.d_enc = m.d_dec = 16;
    m.d_ff = 16;
    m.d_prenet = 8;
    m.d_spk_emb = m.d_lang_emb = 8;
    m.n_enc_layers = m.n_dec_layers = 1;
    m.n_mels = 8;
    m.n_phones = 8;
    m.max_frames = 14;
    return m;
  }
  EvalTest()
      : corpus_(BuildCorpus(Config(), 2)),
        data_(TrainingSet::FromCorpus(corpus_)),
        tts_(NewTtsModel(Model(), corpus_, 3)),
        xvec_(NewXVectorModel([] {
          XVectorConfig x;
          x.n_mels = 8;
          x.hidden = 8;
          x.d_xvec = 4;
          return x;
        }(), corpus_, 4)) {}

  EvalPlan Plan(ScorerKind k) const {
    EvalPlan p = EvalPlan::AllPairs(corpus_.TrainSpeakers(), corpus_.Languages());
    p.utterances_per_pair = 3;
    p.scorer = k;
    p.seed = 5;
    return p;
  }
  EvalContext Context() { return {&corpus_, data_.utterances, &xvec_}; }

  Corpus corpus_;
  TrainingSet data_;
  TtsModel tts_;
  XVectorModel xvec_;
};

TEST_F(EvalTest, PlanTextsAreDeterministicAndInLanguage) {
  const EvalPlan p = Plan(ScorerKind::kOracle);
  EXPECT_NO_THROW(p.Validate(corpus_));
  EXPECT_EQ(p.pairs.size(), 8u);
  for (const EvalPair& pair : p.pairs) {
    for (int i = 0; i < 3; ++i) {
      const auto text = p.Text(corpus_, pair, i);
      EXPECT_EQ(text, p.Text(corpus_, pair, i));
      for (int ph : text) EXPECT_TRUE(corpus_.specs.Language(pair.lang_id).HasPhone(ph));
    }
  }
  EXPECT_NE(p.Text(corpus_, p.pairs[0], 0), p.Text(corpus_, p.pairs[0], 1));
}

TEST_F(EvalTest, PlanValidationAndFingerprint) {
  EvalPlan p = Plan(ScorerKind::kOracle);
  EvalPlan q = Plan(ScorerKind::kIndependentXvector);
  EXPECT_EQ(p.Fingerprint(), q.Fingerprint());
  q.seed = 6;
  EXPECT_NE(p.Fingerprint(), q.Fingerprint());
  p.pairs.push_back({99, 0});
  EXPECT_THROW(p.Validate(corpus_), std::invalid_argument);
  p.pairs = {{0, 7}};
  EXPECT_THROW(p.Validate(corpus_), std::invalid_argument);
  p.pairs.clear();
  EXPECT_THROW(p.Validate(corpus_), std::invalid_argument);
}

TEST_F(EvalTest, OracleScoresRealRecordingsNearZero) {
  OracleScorer scorer(corpus_);
  const auto refs = data_.OfSpeaker(1);
  std::vector<Utterance> ref_utts;
  for (int i : refs) ref_utts.push_back(data_.utterances[static_cast<size_t>(i)]);
  const Utterance& probe = ref_utts.front();
  const auto d = ScorePair(scorer, ref_utts, probe.mel, probe.phones, probe.lang_id);
  ASSERT_TRUE(d.has_value());
  EXPECT_LT(*d, 0.01);
  const Utterance& other = data_.utterances[static_cast<size_t>(data_.OfSpeaker(2).front())];
  EXPECT_GT(*ScorePair(scorer, ref_utts, other.mel, other.phones, other.lang_id), 0.1);
}

TEST_F(EvalTest, TooShortOrSilentSynthesisIsMissing) {
  XVectorScorer xs(xvec_);
  const Utterance& u = data_.utterances[0];
  EXPECT_FALSE(ScorePair(xs, std::span<const Utterance>(&u, 1), Mat::Zero(3, 8), u.phones, u.lang_id).has_value());
  OracleScorer os(corpus_);
  EXPECT_FALSE(ScorePair(os, std::span<const Utterance>(&u, 1), Mat::Constant(5, 8, -4.0), u.phones, u.lang_id)
                   .has_value());
}

TEST_F(EvalTest, ReportsPartitionPairsAndAreDeterministic) {
  const auto a = RunEval(tts_, Plan(ScorerKind::kBoth), Context(), "Baseline");
  const auto b = RunEval(tts_, Plan(ScorerKind::kBoth), Context(), "Baseline");
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a[0].scorer, "oracle");
  EXPECT_EQ(a[1].scorer, "independent_xvector");
  for (size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].ToTsv(), b[i].ToTsv());
  for (const SimilarityReport& r : a) {
    int intra = 0, cross = 0;
    for (const PairResult& p : r.pairs) {
      EXPECT_EQ(p.native_lang, corpus_.specs.Speaker(p.speaker_id).native_lang);
      EXPECT_EQ(p.n_scored + p.n_missing, 3);
      EXPECT_LE(p.n_hit_max, 3);
      (p.intra() ? intra : cross) += 1;
    }
    EXPECT_EQ(intra, 4);
    EXPECT_EQ(cross, 4);
    int n_intra = 0, n_cross = 0;
    for (const LanguageAggregate& l : r.ByLanguage()) {
      n_intra += l.n_intra;
      n_cross += l.n_cross;
    }
    int scored = 0;
    for (const PairResult& p : r.pairs) scored += p.mean_distance.has_value();
    EXPECT_EQ(n_intra + n_cross, scored);
  }
  // The scorer-specific reports share synthesis, so hit-max counts agree.
  for (size_t i = 0; i < a[0].pairs.size(); ++i) EXPECT_EQ(a[0].pairs[i].n_hit_max, a[1].pairs[i].n_hit_max);
}

SimilarityReport Synthetic(const std::string& system, double shift) {
  SimilarityReport r;
  r.system = system;
  r.scorer = "oracle";
  r.seed = 3;
  r.plan = "n=2;seed=3;pairs=0:0,0:1,2:0,2:1";
  for (int s : {0, 2}) {
    for (int l : {0, 1}) {
      PairResult p;
      p.speaker_id = s;
      p.lang_id = l;
      p.native_lang = s / 2;
      p.n_scored = 2;
      p.mean_distance = 0.1 * (s + 1) + 0.05 * l + shift;
      r.pairs.push_back(p);
    }
  }
  r.pairs.back().mean_distance.reset();
  r.pairs.back().n_scored = 0;
  r.pairs.back().n_missing = 2;
  return r;
}

TEST(SimilarityReport, AggregatesByKind) {
  const SimilarityReport r = Synthetic("A", 0.0);
  // intra: (0,0)=0.1, (2,1) missing ; cross: (0,1)=0.15, (2,0)=0.3
  EXPECT_NEAR(*r.IntraMean(), 0.1, 1e-12);
  EXPECT_NEAR(*r.CrossMean(), 0.225, 1e-12);
  EXPECT_NEAR(*r.CrossMeanOf(2), 0.3, 1e-12);
  EXPECT_FALSE(r.IntraMeanExcluding(0).has_value());
  EXPECT_FALSE(r.CrossMeanOf(5).has_value());
}

TEST(SimilarityReport, TsvRoundTrip) {
  const SimilarityReport r = Synthetic("+MTL+Joint", 0.0123456789);
  const std::string tsv = r.ToTsv();
  const SimilarityReport back = ParseReport(tsv);
  EXPECT_EQ(back.ToTsv(), tsv);
  EXPECT_EQ(back.system, "+MTL+Joint");
  EXPECT_FALSE(back.pairs.back().mean_distance.has_value());
  EXPECT_EQ(*back.pairs.front().mean_distance, *r.pairs.front().mean_distance);
  EXPECT_NE(tsv.find("NA"), std::string::npos);
  EXPECT_NE(r.ToTable().find("missing"), std::string::npos);
  EXPECT_ANY_THROW(ParseReport("garbage\n"));
}

TEST(CompareSystems, SingleSystemHasNoBestMarker) {
  const Comparison c = CompareSystems({Synthetic("A", 0.0)});
  EXPECT_EQ(c.systems.size(), 1u);
  EXPECT_EQ(c.ToMarkdown().find("**"), std::string::npos);
  EXPECT_EQ(c.ToText().find('*'), std::string::npos);
}

TEST(CompareSystems, IdenticalReportsHaveZeroDeltas) {
  const Comparison c = CompareSystems({Synthetic("A", 0.0), Synthetic("B", 0.0)});
  for (const ComparisonRow& row : c.rows) {
    for (const auto& d : row.deltas) {
      if (d) EXPECT_EQ(*d, 0.0) << row.label;
    }
  }
}

TEST(CompareSystems, DeltasAndBest) {
  const Comparison c = CompareSystems({Synthetic("A", 0.0), Synthetic("B", -0.05), Synthetic("C", 0.02)});
  bool saw_mean_cross = false;
  for (const ComparisonRow& row : c.rows) {
    if (row.label != "mean cross") continue;
    saw_mean_cross = true;
    EXPECT_EQ(row.best, 1);
    EXPECT_NEAR(*row.deltas[1], -0.05, 1e-12);
    EXPECT_NEAR(*row.deltas[2], 0.02, 1e-12);
  }
  EXPECT_TRUE(saw_mean_cross);
  EXPECT_NE(c.ToMarkdown().find("**"), std::string::npos);
}

TEST(CompareSystems, RejectsMismatchedReports) {
  SimilarityReport b = Synthetic("B", 0.0);
  b.plan = "other";
  EXPECT_THROW(CompareSystems({Synthetic("A", 0.0), b}), std::invalid_argument);
  SimilarityReport c = Synthetic("C", 0.0);
  c.scorer = "independent_xvector";
  EXPECT_THROW(CompareSystems({Synthetic("A", 0.0), c}), std::invalid_argument);
  EXPECT_THROW(CompareSystems({}), std::invalid_argument);
}

}  // namespace
}  // namespace xtts
