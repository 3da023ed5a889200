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

#include <gtest/gtest.h>

#include <cmath>

#include "test_util.h"

namespace xtts {
namespace {

using testing::CheckGradient;
using testing::kFdTolerance;
using testing::RandomMat;

ModelConfig Tiny() {
  ModelConfig c;
  c.d_enc = 16;
  c.d_dec = 16;
  c.n_heads = 2;
  c.n_enc_layers = 1;
  c.n_dec_layers = 1;
  c.d_ff = 24;
  c.d_prenet = 12;
  c.d_spk_emb = 8;
  c.d_lang_emb = 8;
  c.n_mels = 6;
  c.n_phones = 12;
  c.max_frames = 20;
  return c;
}

class TtsModelTest : public ::testing::Test {
 protected:
  TtsModelTest() : model_(Tiny(), {0, 1, 2, 3}, {0, 1}, 7), rng_(11) {
    target_ = RandomMat(9, 6, rng_);
  }

  Var MelLoss(Tape& t, int speaker = 1, int lang = 0) {
    TtsForward f = model_.Forward(t, phones_, speaker, lang, TtsModel::ShiftRight(target_));
    return MseLoss(f.out.mel, target_);
  }

  TtsModel model_;
  std::mt19937_64 rng_;
  std::vector<int> phones_ = {1, 4, 2, 7};
  Mat target_;
};

TEST_F(TtsModelTest, ForwardShapes) {
  Tape t;
  TtsForward f = model_.Forward(t, phones_, 2, 1, TtsModel::ShiftRight(target_));
  EXPECT_EQ(f.cond.s_cond.cols(), 8);
  EXPECT_EQ(f.cond.l_cond.cols(), 8);
  EXPECT_EQ(f.memory.rows(), 4);
  EXPECT_EQ(f.memory.cols(), 16);
  EXPECT_EQ(f.out.mel.rows(), 9);
  EXPECT_EQ(f.out.mel.cols(), 6);
  EXPECT_EQ(f.out.stop.rows(), 9);
  EXPECT_EQ(f.out.stop.cols(), 1);
  MtlLogits h = model_.MtlHeads(t, f.cond.s_cond, f.cond.l_cond);
  EXPECT_EQ(h.speaker.cols(), 4);
  EXPECT_EQ(h.language.cols(), 2);
}

TEST_F(TtsModelTest, UnknownIdsThrow) {
  Tape t;
  EXPECT_ANY_THROW(model_.Condition(t, 9, 0));
  EXPECT_ANY_THROW(model_.Condition(t, 0, 5));
}

TEST_F(TtsModelTest, TeacherForcedMseGradientMatchesFiniteDifferences) {
  for (const char* name : {"speaker_table", "language_table", "phone_table", "speaker_net.w", "inject.speaker",
                           "decoder.prenet1.w", "decoder.in.w", "decoder.mel.w", "decoder.mel.b"}) {
    Parameter& p = model_.params().Get(name);
    const auto r = CheckGradient(p, [&](Tape& t) { return MelLoss(t); }, 32, 5);
    EXPECT_LT(r.max_rel_error, kFdTolerance) << name;
  }
}

TEST_F(TtsModelTest, EveryParameterGradientMatchesFiniteDifferences) {
  testing::JitterBiases(model_.params(), 3);
  auto loss = [&](Tape& t) {
    TtsForward f = model_.Forward(t, phones_, 1, 0, TtsModel::ShiftRight(target_));
    Mat stop = Mat::Zero(target_.rows(), 1);
    stop(target_.rows() - 1, 0) = 1.0;
    MtlLogits h = model_.MtlHeads(t, f.cond.s_cond, f.cond.l_cond);
    Var parts = Add(MseLoss(f.out.mel, target_), BceWithLogits(f.out.stop, stop, 5.0));
    return Add(parts, Add(CrossEntropy(h.speaker, 1), CrossEntropy(h.language, 0)));
  };
  for (Parameter* p : model_.params().All()) {
    const auto r = CheckGradient(*p, loss, 8, 6);
    EXPECT_LT(r.max_rel_error, kFdTolerance) << p->name;
  }
}

TEST_F(TtsModelTest, OnlyTheConditionedSpeakerRowReceivesGradient) {
  model_.params().ZeroGrad();
  Tape t;
  t.Backward(MelLoss(t, 2, 1));
  const Mat& g = model_.params().Get("speaker_table").grad;
  for (int r = 0; r < g.rows(); ++r) {
    if (r == model_.SpeakerIndex(2)) {
      EXPECT_GT(g.row(r).norm(), 0.0);
    } else {
      EXPECT_EQ(g.row(r).norm(), 0.0);
    }
  }
  const Mat& gl = model_.params().Get("language_table").grad;
  EXPECT_EQ(gl.row(model_.LanguageIndex(0)).norm(), 0.0);
}

TEST(TtsModel, DecoderIsCausal) {
  // 10-frame instance; rows < j must not see teacher-input rows >= j.
  TtsModel model(Tiny(), {0, 1}, {0, 1}, 3);
  std::mt19937_64 rng(4);
  const std::vector<int> phones = {0, 3, 5};
  const Mat inputs = RandomMat(10, 6, rng);
  auto decode = [&](const Mat& in) {
    Tape t(false);
    TtsForward f = model.Forward(t, phones, 0, 1, in);
    Mat out(in.rows(), 7);
    out << f.out.mel.value(), f.out.stop.value();
    return out;
  };
  const Mat base = decode(inputs);
  for (int j = 0; j < 10; ++j) {
    Mat perturbed = inputs;
    perturbed.bottomRows(10 - j) += RandomMat(10 - j, 6, rng, 5.0);
    const Mat out = decode(perturbed);
    if (j > 0) {
      EXPECT_LE((out.topRows(j) - base.topRows(j)).cwiseAbs().maxCoeff(), 1e-6) << "j=" << j;
    }
    EXPECT_GT((out.row(j) - base.row(j)).cwiseAbs().maxCoeff(), 0.0) << "j=" << j;
  }
}

TEST_F(TtsModelTest, EncoderPaddingIsMasked) {
  std::vector<int> padded = phones_;
  padded.push_back(11);
  padded.push_back(9);
  Tape t(false);
  Var l = model_.Condition(t, 0, 0).l_cond;
  const Mat a = model_.Encode(t, phones_, l).value();
  const Mat b = model_.Encode(t, padded, l, static_cast<int>(phones_.size())).value();
  EXPECT_LT((b.topRows(a.rows()) - a).cwiseAbs().maxCoeff(), 1e-12);
  const Mat c = model_.Encode(t, padded, l).value();
  EXPECT_GT((c.topRows(a.rows()) - a).cwiseAbs().maxCoeff(), 1e-6);
}

TEST_F(TtsModelTest, InjectionIsAdditive) {
  Tape t(false);
  ConditioningVectors cond = model_.Condition(t, 3, 1);
  Var enc = model_.Encode(t, phones_, cond.l_cond);
  const Mat injected = model_.ConditionInjection(t, enc, cond.s_cond, cond.l_cond).value();
  const RowVec offset = cond.s_cond.value() * model_.params().Get("inject.speaker").value +
                        cond.l_cond.value() * model_.params().Get("inject.language").value;
  const Mat expect = enc.value().rowwise() + offset;
  EXPECT_LT((injected - expect).cwiseAbs().maxCoeff(), 1e-12);
}

TEST_F(TtsModelTest, InferMatchesTeacherForcedPassOnItsOwnOutput) {
  const InferResult r = model_.Infer(phones_, 1, 0, 12);
  ASSERT_GE(r.mel.rows(), 1);
  Tape t(false);
  TtsForward f = model_.Forward(t, phones_, 1, 0, TtsModel::ShiftRight(r.mel));
  EXPECT_LT((f.out.mel.value() - r.mel).cwiseAbs().maxCoeff(), 1e-10);
  // Stop fired only on the last frame, unless the frame cap was hit.
  for (Eigen::Index i = 0; i + 1 < r.mel.rows(); ++i) EXPECT_LE(f.out.stop.value()(i, 0), 0.0);
  if (!r.hit_max_frames) EXPECT_GT(f.out.stop.value()(r.mel.rows() - 1, 0), 0.0);
}

TEST_F(TtsModelTest, InferStopsAndCaps) {
  Parameter& stop_b = model_.params().Get("decoder.stop.b");
  stop_b.value(0, 0) = 1e3;
  InferResult r = model_.Infer(phones_, 0, 0, 12);
  EXPECT_EQ(r.mel.rows(), 1);
  EXPECT_FALSE(r.hit_max_frames);
  stop_b.value(0, 0) = -1e3;
  r = model_.Infer(phones_, 0, 0, 12);
  EXPECT_EQ(r.mel.rows(), 12);
  EXPECT_TRUE(r.hit_max_frames);
  // Capped by the model's max_frames as well.
  r = model_.Infer(phones_, 0, 0, 1000);
  EXPECT_EQ(r.mel.rows(), 20);
  EXPECT_THROW(model_.Infer(phones_, 0, 0, 0), std::invalid_argument);
}

TEST_F(TtsModelTest, InferIsDeterministic) {
  EXPECT_EQ(model_.Infer(phones_, 2, 1, 10).mel, model_.Infer(phones_, 2, 1, 10).mel);
}

TEST_F(TtsModelTest, CheckpointRoundTripIsBitExact) {
  model_.completed_stages() = {"baseline", "joint"};
  const std::string bytes = SerializeCheckpoint(model_.ToCheckpoint());
  TtsModel back = TtsModel::FromCheckpoint(DeserializeCheckpoint(bytes));
  EXPECT_EQ(SerializeCheckpoint(back.ToCheckpoint()), bytes);
  EXPECT_EQ(back.speaker_ids(), model_.speaker_ids());
  EXPECT_EQ(back.completed_stages(), model_.completed_stages());
  EXPECT_EQ(back.Infer(phones_, 1, 1, 8).mel, model_.Infer(phones_, 1, 1, 8).mel);
}

TEST_F(TtsModelTest, AppendSpeakerStartsFromMean) {
  const Mat before = model_.params().Get("speaker_table").value;
  model_.AppendSpeaker(42);
  const Mat& after = model_.params().Get("speaker_table").value;
  ASSERT_EQ(after.rows(), 5);
  EXPECT_EQ(after.topRows(4), before);
  EXPECT_LT((after.row(4) - before.colwise().mean()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(model_.params().Get("mtl_speaker.out.w").value.cols(), 5);
  EXPECT_EQ(model_.SpeakerIndex(42), 4);
  EXPECT_THROW(model_.AppendSpeaker(42), std::invalid_argument);
  Tape t(false);
  EXPECT_EQ(model_.Forward(t, phones_, 42, 0, TtsModel::ShiftRight(target_)).out.mel.rows(), 9);
}

TEST(TtsModel, ShiftRight) {
  Mat m(3, 2);
  m << 1, 2, 3, 4, 5, 6;
  Mat expect(3, 2);
  expect << 0, 0, 1, 2, 3, 4;
  EXPECT_EQ(TtsModel::ShiftRight(m), expect);
}

TEST(TtsModel, PositionalEncodingRange) {
  const Mat pe = PositionalEncoding(50, 16);
  EXPECT_EQ(pe.rows(), 50);
  EXPECT_LE(pe.cwiseAbs().maxCoeff(), 1.0);
  EXPECT_EQ(pe(0, 0), 0.0);
}

TEST(ModelConfig, ValidateAndKv) {
  ModelConfig c = Tiny();
  c.n_heads = 3;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  const ModelConfig f = ModelConfig::FullScale();
  EXPECT_EQ(ModelConfig::FromKv(f.ToKv()).ToKv().ToString(), f.ToKv().ToString());
}

TEST(TtsModel, SameSeedSameParameters) {
  TtsModel a(Tiny(), {0, 1}, {0}, 5), b(Tiny(), {0, 1}, {0}, 5), c(Tiny(), {0, 1}, {0}, 6);
  EXPECT_EQ(SerializeCheckpoint(a.ToCheckpoint()), SerializeCheckpoint(b.ToCheckpoint()));
  EXPECT_NE(SerializeCheckpoint(a.ToCheckpoint()), SerializeCheckpoint(c.ToCheckpoint()));
}

}  // namespace
}  // namespace xtts
