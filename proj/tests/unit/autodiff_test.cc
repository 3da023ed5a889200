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

#include "xtts/autodiff.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.h"

namespace xtts {
namespace {

using testing::CheckGradient;
using testing::kFdTolerance;
using testing::RandomMat;

struct OpCase {
  const char* name;
  std::function<Var(Tape&, Var x)> f;
  int rows, cols;
};

class OpGradientTest : public ::testing::TestWithParam<OpCase> {};

TEST_P(OpGradientTest, MatchesCentralDifferences) {
  const OpCase& c = GetParam();
  std::mt19937_64 rng(17);
  Parameter x("x", RandomMat(c.rows, c.cols, rng));
  auto loss = [&](Tape& t) {
    Var y = c.f(t, t.Param(x));
    // A random projection to a scalar so every output entry matters.
    std::mt19937_64 prng(5);
    const Mat proj = RandomMat(y.rows(), y.cols(), prng);
    return SumAll(Mul(y, t.Constant(proj)));
  };
  const auto r = CheckGradient(x, loss, 64, 3);
  EXPECT_LT(r.max_rel_error, kFdTolerance) << c.name;
  EXPECT_GT(r.max_abs_grad, 0.0) << c.name;
}

Mat Fixed(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return RandomMat(r, c, rng);
}

INSTANTIATE_TEST_SUITE_P(
    Ops, OpGradientTest,
    ::testing::Values(
        OpCase{"MatMul", [](Tape& t, Var x) { return MatMul(x, t.Constant(Fixed(4, 3, 1))); }, 3, 4},
        OpCase{"MatMulT", [](Tape& t, Var x) { return MatMulT(x, t.Constant(Fixed(5, 4, 2))); }, 3, 4},
        OpCase{"MatMulSelf", [](Tape&, Var x) { return MatMulT(x, x); }, 3, 4},
        OpCase{"AddSubMul",
               [](Tape& t, Var x) { return Mul(Sub(x, t.Constant(Fixed(3, 4, 3))), Add(x, x)); }, 3, 4},
        OpCase{"AddRow", [](Tape& t, Var x) { return AddRow(t.Constant(Fixed(3, 4, 4)), SliceRows(x, 0, 1)); }, 3, 4},
        OpCase{"Affine",
               [](Tape& t, Var x) { return Affine(x, t.Constant(Fixed(4, 2, 5)), t.Constant(Fixed(1, 2, 6))); }, 3,
               4},
        OpCase{"Tanh", [](Tape&, Var x) { return Tanh(x); }, 3, 4},
        OpCase{"Sigmoid", [](Tape&, Var x) { return Sigmoid(x); }, 3, 4},
        OpCase{"Square", [](Tape&, Var x) { return Square(x); }, 3, 4},
        OpCase{"Concat",
               [](Tape&, Var x) {
                 Var parts[] = {x, Tanh(x)};
                 Var rows[] = {ConcatCols(parts), ConcatCols(parts)};
                 return ConcatRows(rows);
               },
               3, 4},
        OpCase{"SliceCols", [](Tape&, Var x) { return SliceCols(x, 1, 2); }, 3, 4},
        OpCase{"Gather",
               [](Tape&, Var x) {
                 const int ids[] = {2, 0, 2};
                 return GatherRows(x, ids);
               },
               3, 4},
        OpCase{"RepeatRow", [](Tape&, Var x) { return RepeatRow(SliceRows(x, 1, 1), 5); }, 3, 4},
        OpCase{"Splice",
               [](Tape&, Var x) {
                 const int off[] = {-1, 0, 1};
                 return Splice(x, off);
               },
               6, 3},
        OpCase{"MeanRows", [](Tape&, Var x) { return MeanRows(x); }, 3, 4},
        OpCase{"Softmax", [](Tape&, Var x) { return SoftmaxRows(x); }, 3, 4},
        OpCase{"LayerNorm",
               [](Tape& t, Var x) { return LayerNorm(x, t.Constant(Fixed(1, 4, 7)), t.Constant(Fixed(1, 4, 8))); }, 3,
               4},
        OpCase{"StatsPool", [](Tape&, Var x) { return StatsPool(x, 1e-6); }, 5, 3},
        OpCase{"L2Distance", [](Tape& t, Var x) { return L2Distance(x, t.Constant(Fixed(1, 4, 9))); }, 1, 4},
        OpCase{"Mse", [](Tape&, Var x) { return MseLoss(x, Fixed(3, 4, 10)); }, 3, 4},
        OpCase{"Bce",
               [](Tape&, Var x) {
                 Mat y = Mat::Zero(3, 1);
                 y(2, 0) = 1.0;
                 return BceWithLogits(x, y, 5.0);
               },
               3, 1},
        OpCase{"CrossEntropy", [](Tape&, Var x) { return CrossEntropy(x, 2); }, 1, 5}),
    [](const ::testing::TestParamInfo<OpCase>& info) { return std::string(info.param.name); });

TEST(Autodiff, ReluGradientIsIndicator) {
  Parameter x("x", Mat(1, 4));
  x.value << -1.0, 2.0, -0.5, 3.0;
  Tape t;
  t.Backward(SumAll(Relu(t.Param(x))));
  Mat expect(1, 4);
  expect << 0.0, 1.0, 0.0, 1.0;
  EXPECT_EQ(x.grad, expect);
}

TEST(Autodiff, ReluSignatureTracksSignPattern) {
  auto signature = [](double v) {
    Tape t(false);
    Relu(t.Constant(Mat::Constant(1, 3, v)));
    return t.relu_signature();
  };
  EXPECT_EQ(signature(0.5), signature(2.0));
  EXPECT_NE(signature(0.5), signature(-0.5));
  Tape t(false);
  EXPECT_EQ(t.relu_signature(), Tape(false).relu_signature());
}

TEST(Autodiff, GradientCheckSkipsProbesAcrossAKink) {
  Parameter x("x", Mat(1, 2));
  x.value << 1e-5, 0.5;
  const auto r = CheckGradient(x, [&](Tape& t) { return SumAll(Relu(t.Param(x))); }, 2, 1);
  EXPECT_EQ(r.kinks, 1);
  EXPECT_EQ(r.checked, 1);
  EXPECT_LT(r.max_rel_error, kFdTolerance);
}

TEST(Autodiff, FrozenParameterReceivesNoGradient) {
  Parameter w("w", Mat::Ones(2, 2));
  Parameter x("x", Mat::Ones(1, 2));
  Tape t;
  t.Backward(SumAll(MatMul(t.Param(x), t.Frozen(w))));
  EXPECT_EQ(w.grad.norm(), 0.0);
  EXPECT_GT(x.grad.norm(), 0.0);
}

TEST(Autodiff, ParamNodeIsSharedWithinATape) {
  Parameter x("x", Mat::Constant(1, 1, 3.0));
  Tape t;
  Var a = t.Param(x);
  Var b = t.Param(x);
  EXPECT_EQ(a.id(), b.id());
  t.Backward(Mul(a, b));  // d(x^2)/dx = 6
  EXPECT_DOUBLE_EQ(x.grad(0, 0), 6.0);
}

TEST(Autodiff, NoGradTapeLeavesGradientsUntouched) {
  Parameter x("x", Mat::Ones(2, 2));
  Tape t(false);
  Var y = SumAll(Square(t.Param(x)));
  EXPECT_FALSE(y.needs_grad());
  EXPECT_DOUBLE_EQ(y.scalar(), 4.0);
  EXPECT_EQ(x.grad.norm(), 0.0);
}

TEST(Autodiff, L2DistanceHasZeroGradientAtEquality) {
  Parameter x("x", Mat::Ones(1, 3));
  Tape t;
  Var d = L2Distance(t.Param(x), t.Constant(Mat::Ones(1, 3)));
  t.Backward(d);
  EXPECT_EQ(d.scalar(), 0.0);
  EXPECT_TRUE(x.grad.allFinite());
  EXPECT_EQ(x.grad.norm(), 0.0);
}

TEST(Autodiff, DropoutIsIdentityWithoutRng) {
  Tape t;
  Var x = t.Constant(Mat::Ones(2, 3));
  EXPECT_EQ(Dropout(x, 0.5, nullptr).value(), x.value());
  std::mt19937_64 rng(1);
  EXPECT_EQ(Dropout(x, 0.0, &rng).value(), x.value());
}

TEST(Autodiff, DropoutPreservesExpectation) {
  std::mt19937_64 rng(3);
  Tape t(false);
  Var y = Dropout(t.Constant(Mat::Ones(200, 50)), 0.25, &rng);
  EXPECT_NEAR(y.value().mean(), 1.0, 0.02);
}

TEST(Autodiff, ShapeMismatchThrows) {
  Tape t;
  EXPECT_THROW(Add(t.Constant(Mat::Ones(2, 2)), t.Constant(Mat::Ones(2, 3))), std::invalid_argument);
  EXPECT_THROW(MatMul(t.Constant(Mat::Ones(2, 2)), t.Constant(Mat::Ones(3, 2))), std::invalid_argument);
}

TEST(Autodiff, SpliceProducesValidPositionsOnly) {
  Tape t;
  Mat x(5, 1);
  x << 0, 1, 2, 3, 4;
  const int off[] = {-1, 0, 1};
  Var y = Splice(t.Constant(x), off);
  ASSERT_EQ(y.rows(), 3);
  ASSERT_EQ(y.cols(), 3);
  Mat expect(3, 3);
  expect << 0, 1, 2, 1, 2, 3, 2, 3, 4;
  EXPECT_EQ(y.value(), expect);
}

TEST(Autodiff, LogSoftmaxIsStable) {
  RowVec z(3);
  z << 1000.0, 0.0, -1000.0;
  const RowVec l = LogSoftmax(z);
  EXPECT_TRUE(l.allFinite());
  EXPECT_NEAR(l(0), 0.0, 1e-12);
}

TEST(ParamSet, GradNormAndFiniteness) {
  ParamSet ps;
  Parameter& a = ps.Add("a", Mat::Zero(1, 2));
  ps.Add("b", Mat::Zero(1, 1));
  a.grad << 3.0, 4.0;
  EXPECT_DOUBLE_EQ(ps.GradNorm(), 5.0);
  EXPECT_TRUE(ps.AllFinite());
  a.value(0, 0) = std::nan("");
  EXPECT_FALSE(ps.AllFinite());
  EXPECT_THROW(ps.Add("a", Mat::Zero(1, 1)), std::invalid_argument);
  EXPECT_TRUE(ps.Has("b"));
  ps.ZeroGrad();
  EXPECT_EQ(ps.GradNorm(), 0.0);
}

}  // namespace
}  // namespace xtts
