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

#include "xtts/experiment.h"

#include <gtest/gtest.h>

#include <set>

#include "mini_experiment.h"

namespace xtts {
namespace {

TEST(ExperimentConfig, DeskIsValidAndRoundTrips) {
  const ExperimentConfig c = ExperimentConfig::Desk();
  EXPECT_NO_THROW(c.Validate());
  EXPECT_EQ(c.corpus.n_languages, 4);
  EXPECT_EQ(c.corpus.speakers_per_language, 3);
  const ExperimentConfig d = ExperimentConfig::FromKv(c.ToKv());
  EXPECT_EQ(d.ToKv().ToString(), c.ToKv().ToString());
}

TEST(ExperimentConfig, KeysOverlayDefaults) {
  KvConfig kv;
  kv.Set("seed", 9);
  kv.Set("train.joint.lambda_cross", 0.5);
  kv.Set("model.d_ff", 96);
  kv.Set("eval.scorer", std::string("oracle"));
  const ExperimentConfig c = ExperimentConfig::FromKv(kv);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.joint.lambda_cross, 0.5);
  EXPECT_EQ(c.joint.steps, ExperimentConfig::Desk().joint.steps);
  EXPECT_EQ(c.model.d_ff, 96);
  EXPECT_EQ(c.model.d_enc, ModelConfig::Desk().d_enc);
  EXPECT_EQ(c.eval_scorer, ScorerKind::kOracle);
  kv.Set("model.preset", std::string("full"));
  EXPECT_EQ(ExperimentConfig::FromKv(kv).model.d_enc, ModelConfig::FullScale().d_enc);
}

TEST(ExperimentConfig, ValidationCatchesInconsistencies) {
  ExperimentConfig c = ExperimentConfig::Desk();
  c.model.n_mels = 10;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = ExperimentConfig::Desk();
  c.model.n_phones = 4;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = ExperimentConfig::Desk();
  c.stages = {Stage::kBaseline, Stage::kJoint, Stage::kSpkClassifier};
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  KvConfig kv;
  kv.Set("stages", std::string("joint,baseline"));
  EXPECT_THROW(ExperimentConfig::FromKv(kv).Validate(), std::invalid_argument);
}

TEST(ExperimentConfig, SeedsAreDistinctAndMixed) {
  const ExperimentSeeds s = ExperimentSeeds::From(1);
  const std::set<std::uint64_t> all = {s.corpus, s.tts_init, s.xvec_init, s.scorer_init, s.scorer_train, s.held_out};
  EXPECT_EQ(all.size(), 6u);
  ExperimentConfig a = ExperimentConfig::Desk(), b = ExperimentConfig::Desk();
  b.seed = 2;
  EXPECT_NE(a.ForStage(Stage::kJoint).seed, b.ForStage(Stage::kJoint).seed);
  EXPECT_EQ(a.ForStage(Stage::kBaseline).seed, a.ForStage(Stage::kMtl).seed);
  EXPECT_NE(a.ForExtension().seed, a.ForStage(Stage::kJoint).seed);
}

TEST(Experiment, CloneIsBitExactAndIndependent) {
  const ExperimentConfig c = testing::MiniExperiment(1);
  const Corpus corpus = BuildCorpus(c.corpus, 1);
  TtsModel a = NewTtsModel(c.model, corpus, 2);
  TtsModel b = CloneModel(a);
  EXPECT_EQ(SerializeCheckpoint(a.ToCheckpoint()), SerializeCheckpoint(b.ToCheckpoint()));
  b.params().Get("speaker_table").value(0, 0) += 1.0;
  EXPECT_NE(a.params().Get("speaker_table").value(0, 0), b.params().Get("speaker_table").value(0, 0));
}

TEST(Experiment, HeldOutRendersAreFreshAndTrimmed) {
  const ExperimentConfig c = testing::MiniExperiment(1);
  const Corpus corpus = BuildCorpus(c.corpus, 1);
  const auto held = RenderHeldOut(corpus, 3, 77);
  EXPECT_EQ(held.size(), 3u * corpus.TrainSpeakers().size());
  for (const Utterance& u : held) {
    EXPECT_TRUE(IsSilenceFrame(u.mel, 0, c.corpus.silence_floor));
    EXPECT_FALSE(IsSilenceFrame(u.mel, c.corpus.trim_frames, c.corpus.silence_floor));
  }
  EXPECT_EQ(RenderHeldOut(corpus, 3, 77)[4].mel, held[4].mel);
}

TEST(Experiment, MtlAccuracyIsAFraction) {
  const ExperimentConfig c = testing::MiniExperiment(1);
  const Corpus corpus = BuildCorpus(c.corpus, 1);
  TtsModel m = NewTtsModel(c.model, corpus, 3);
  const MtlAccuracy acc = EvaluateMtlHeads(m);
  EXPECT_GE(acc.speaker, 0.0);
  EXPECT_LE(acc.speaker, 1.0);
  EXPECT_GE(acc.language, 0.0);
  EXPECT_LE(acc.language, 1.0);
}

TEST(Experiment, MiniComparisonRunsEndToEndAndIsReproducible) {
  ExperimentConfig c = testing::MiniExperiment(3);
  c.corpus.new_speaker_utterances = 2;
  c.corpus.new_speaker_language = 1;
  std::vector<std::string> notes;
  const ComparisonRun a = RunComparison(c, true, [&](const std::string& m) { notes.push_back(m); });
  ASSERT_EQ(a.oracle.size(), 3u);
  ASSERT_EQ(a.xvector.size(), 3u);
  EXPECT_EQ(a.oracle[0].system, "Baseline");
  EXPECT_EQ(a.oracle[2].system, "+MTL+Joint");
  ASSERT_EQ(a.traces.size(), 6u);  // four stages plus two extension refinements
  EXPECT_LE(a.traces[3].CrossSteps(), 2);
  ASSERT_TRUE(a.extension.has_value());
  EXPECT_EQ(a.extension->new_speaker, 4);
  EXPECT_FALSE(notes.empty());
  EXPECT_NE(a.Summary().find("extension"), std::string::npos);

  const ComparisonRun b = RunComparison(c, true);
  for (size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.oracle[i].ToTsv(), b.oracle[i].ToTsv());
    EXPECT_EQ(a.xvector[i].ToTsv(), b.xvector[i].ToTsv());
  }
  for (size_t i = 0; i < a.traces.size(); ++i) EXPECT_EQ(a.traces[i].ToText(), b.traces[i].ToText());
  EXPECT_EQ(a.extension->joint.ToTsv(), b.extension->joint.ToTsv());
}

}  // namespace
}  // namespace xtts
