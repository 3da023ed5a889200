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

#include <gtest/gtest.h>

#include <cmath>

#include "test_util.h"

namespace xtts {
namespace {

using testing::CheckGradient;
using testing::kFdTolerance;
using testing::RandomMat;
using testing::RandomRow;

// Brute-force per-column mean and population standard deviation.
RowVec BruteStats(const Mat& x, double floor) {
  const Eigen::Index n = x.rows(), c = x.cols();
  RowVec out(2 * c);
  for (Eigen::Index j = 0; j < c; ++j) {
    double s = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) s += x(t, j);
    const double m = s / static_cast<double>(n);
    double v = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) v += (x(t, j) - m) * (x(t, j) - m);
    v /= static_cast<double>(n);
    out(j) = m;
    out(c + j) = std::sqrt(std::max(v, floor));
  }
  return out;
}

TEST(StatsPool, EqualsBruteForceExactlyOnDyadicData) {
  // Integer data over a power-of-two frame count: every intermediate is exact.
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> d(-8, 8);
  for (int trial = 0; trial < 50; ++trial) {
    Mat x(8, 6);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = d(rng);
    Tape t(false);
    const RowVec got = StatsPool(t.Constant(x), 1e-6).value().row(0);
    EXPECT_EQ(got, BruteStats(x, 1e-6));
  }
}

TEST(StatsPool, MatchesBruteForceOnRandomData) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Mat x = RandomMat(3 + trial % 17, 5, rng);
    Tape t(false);
    const RowVec got = StatsPool(t.Constant(x), 1e-6).value().row(0);
    EXPECT_LT((got - BruteStats(x, 1e-6)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(StatsPool, ConstantInputHitsFloor) {
  Tape t(false);
  const RowVec got = StatsPool(t.Constant(Mat::Constant(5, 2, 3.0)), 1e-6).value().row(0);
  EXPECT_EQ(got(0), 3.0);
  EXPECT_DOUBLE_EQ(got(2), 1e-3);
}

TEST(StatsPool, LengthInvariantUnderRepetition) {
  std::mt19937_64 rng(6);
  const Mat x = RandomMat(7, 4, rng);
  Mat twice(14, 4);
  twice << x, x;
  Tape t(false);
  const RowVec a = StatsPool(t.Constant(x), 1e-6).value().row(0);
  const RowVec b = StatsPool(t.Constant(twice), 1e-6).value().row(0);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Metrics, CosineDistanceProperties) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const RowVec a = RandomRow(8, rng), b = RandomRow(8, rng);
    const double d = CosineDistance(a, b);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 2.0);
    EXPECT_DOUBLE_EQ(d, CosineDistance(b, a));
    EXPECT_NEAR(CosineDistance(a, a), 0.0, 1e-12);
    EXPECT_NEAR(CosineDistance(a, -a), 2.0, 1e-12);
    EXPECT_NEAR(CosineDistance(a, 3.5 * a), 0.0, 1e-12);
  }
  RowVec e(3);
  e << 1.0, 0.0, 0.0;
  EXPECT_EQ(CosineDistance(e, e), 0.0);
  EXPECT_EQ(CosineDistance(e, -e), 2.0);
  RowVec f(3);
  f << 0.0, 1.0, 0.0;
  EXPECT_EQ(CosineDistance(e, f), 1.0);
}

TEST(Metrics, CosineDistanceRejectsBadInput) {
  EXPECT_THROW(CosineDistance(RowVec::Zero(3), RowVec::Ones(3)), std::invalid_argument);
  EXPECT_THROW(CosineDistance(RowVec::Ones(2), RowVec::Ones(3)), std::invalid_argument);
}

TEST(Metrics, L2DistanceAxiomsOnRandomTriples) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const double s = scale(rng);
    const RowVec a = RandomRow(6, rng, s), b = RandomRow(6, rng, s), c = RandomRow(6, rng, s);
    const double ab = L2DistanceValue(a, b), bc = L2DistanceValue(b, c), ac = L2DistanceValue(a, c);
    EXPECT_GE(ab, 0.0);
    EXPECT_EQ(L2DistanceValue(a, a), 0.0);
    EXPECT_GT(ab, 0.0);
    EXPECT_DOUBLE_EQ(ab, L2DistanceValue(b, a));
    EXPECT_LE(ac, ab + bc + 1e-12 * (ab + bc));
  }
  EXPECT_THROW(L2DistanceValue(RowVec::Ones(2), RowVec::Ones(3)), std::invalid_argument);
}

class XVectorTest : public ::testing::Test {
 protected:
  XVectorTest() : model_(XVectorConfig::Desk(), {0, 1, 2}, 3) {}
  XVectorModel model_;
};

TEST_F(XVectorTest, EmbeddingShapeAndMinFrames) {
  EXPECT_EQ(model_.config().MinFrames(), 9);
  std::mt19937_64 rng(1);
  EXPECT_EQ(model_.EmbedValue(RandomMat(9, 20, rng)).size(), 32);
  EXPECT_THROW(model_.EmbedValue(RandomMat(8, 20, rng)), std::invalid_argument);
}

TEST(XVector, FrameWiseEmbeddingInvariantToRepetition) {
  // With single-frame contexts every frame-level output depends on its own
  // frame only, so tiling the input tiles the activations.
  XVectorConfig c;
  c.contexts = {1, 1};
  XVectorModel model(c, {0, 1}, 9);
  std::mt19937_64 rng(2);
  const Mat x = RandomMat(10, 20, rng);
  Mat tiled(30, 20);
  tiled << x, x, x;
  const RowVec a = model.EmbedValue(x), b = model.EmbedValue(tiled);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-10);
}

TEST_F(XVectorTest, EmbedGradientWrtMel) {
  std::mt19937_64 rng(3);
  Parameter mel("mel", RandomMat(14, 20, rng));
  const Mat proj = RandomMat(1, 32, rng);
  auto loss = [&](Tape& t) { return SumAll(Mul(model_.Embed(t, t.Param(mel)), t.Constant(proj))); };
  const auto r = CheckGradient(mel, loss, 64, 1);
  EXPECT_LT(r.max_rel_error, kFdTolerance);
  EXPECT_GT(r.max_abs_grad, 0.0);
}

TEST_F(XVectorTest, EmbedGradientWrtEveryParameter) {
  std::mt19937_64 rng(4);
  const Mat mel = RandomMat(14, 20, rng);
  for (Parameter* p : model_.params().All()) {
    auto loss = [&](Tape& t) { return CrossEntropy(model_.Classify(t, model_.Embed(t, t.Constant(mel))), 1); };
    const auto r = CheckGradient(*p, loss, 24, 2);
    EXPECT_LT(r.max_rel_error, kFdTolerance) << p->name;
  }
}

TEST_F(XVectorTest, FrozenEmbedLeavesParametersUntouched) {
  std::mt19937_64 rng(5);
  Parameter mel("mel", RandomMat(12, 20, rng));
  model_.params().ZeroGrad();
  Tape t;
  t.Backward(SumAll(model_.Embed(t, t.Param(mel), true)));
  for (const Parameter* p : model_.params().All()) EXPECT_EQ(p->grad.cwiseAbs().maxCoeff(), 0.0) << p->name;
  EXPECT_GT(mel.grad.norm(), 0.0);
}

TEST_F(XVectorTest, CheckpointRoundTrip) {
  model_.completed_stages().push_back("spk_classifier");
  const std::string bytes = SerializeCheckpoint(model_.ToCheckpoint());
  XVectorModel back = XVectorModel::FromCheckpoint(DeserializeCheckpoint(bytes));
  EXPECT_EQ(SerializeCheckpoint(back.ToCheckpoint()), bytes);
  EXPECT_TRUE(back.HasCompleted("spk_classifier"));
  std::mt19937_64 rng(6);
  const Mat x = RandomMat(20, 20, rng);
  EXPECT_EQ(back.EmbedValue(x), model_.EmbedValue(x));
}

TEST_F(XVectorTest, AppendSpeakerUsesMeanRow) {
  model_.AppendSpeaker(7);
  EXPECT_TRUE(model_.HasSpeaker(7));
  EXPECT_EQ(model_.SpeakerIndex(7), 3);
  EXPECT_THROW(model_.AppendSpeaker(7), std::invalid_argument);
  std::mt19937_64 rng(7);
  Tape t(false);
  const Mat logits = model_.Classify(t, model_.Embed(t, t.Constant(RandomMat(15, 20, rng)))).value();
  ASSERT_EQ(logits.cols(), 4);
  EXPECT_NEAR(logits(0, 3), logits.leftCols(3).mean(), 1e-12);
}

TEST(XVectorConfig, ValidateAndKv) {
  XVectorConfig c;
  c.contexts = {};
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  const XVectorConfig r = XVectorConfig::Reference();
  EXPECT_EQ(r.hidden, 256);
  EXPECT_EQ(XVectorConfig::FromKv(r.ToKv()).ToKv().ToString(), r.ToKv().ToString());
}

}  // namespace
}  // namespace xtts
