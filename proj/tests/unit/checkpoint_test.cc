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

#include "xtts/checkpoint.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "test_util.h"

namespace xtts {
namespace {

Checkpoint Sample() {
  Checkpoint c;
  c.kind = "tts";
  c.meta.Set("d_enc", 8);
  std::mt19937_64 rng(1);
  c.tensors.emplace_back("a", testing::RandomMat(3, 4, rng));
  Mat special(1, 3);
  special << std::numeric_limits<double>::denorm_min(), -0.0, 1.0 / 3.0;
  c.tensors.emplace_back("b", special);
  return c;
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const Checkpoint c = Sample();
  const std::string bytes = SerializeCheckpoint(c);
  const Checkpoint d = DeserializeCheckpoint(bytes);
  EXPECT_EQ(d.kind, "tts");
  EXPECT_EQ(d.meta.ToString(), c.meta.ToString());
  ASSERT_EQ(d.tensors.size(), 2u);
  EXPECT_EQ(d.Tensor("a"), c.Tensor("a"));
  EXPECT_TRUE(std::signbit(d.Tensor("b")(0, 1)));
  EXPECT_EQ(d.Tensor("b")(0, 0), std::numeric_limits<double>::denorm_min());
  EXPECT_EQ(SerializeCheckpoint(d), bytes);
  EXPECT_EQ(bytes.substr(0, 4), "XTCK");
}

TEST(Checkpoint, RejectsCorruptInput) {
  const std::string bytes = SerializeCheckpoint(Sample());
  EXPECT_ANY_THROW(DeserializeCheckpoint("XXXX" + bytes.substr(4)));
  EXPECT_ANY_THROW(DeserializeCheckpoint(bytes.substr(0, bytes.size() - 5)));
  std::string bad_version = bytes;
  bad_version[4] = 99;
  EXPECT_ANY_THROW(DeserializeCheckpoint(bad_version));
  EXPECT_ANY_THROW(Sample().Tensor("missing"));
}

TEST(Checkpoint, FileRoundTrip) {
  const std::string dir = testing::TempDir("ckpt");
  SaveCheckpoint(Sample(), dir + "/m.ckpt");
  EXPECT_EQ(SerializeCheckpoint(LoadCheckpoint(dir + "/m.ckpt")), SerializeCheckpoint(Sample()));
  EXPECT_ANY_THROW(LoadCheckpoint(dir + "/none.ckpt"));
}

TEST(Checkpoint, RestoreParamsChecksShapes) {
  ParamSet ps;
  ps.Add("a", Mat::Zero(3, 4));
  ps.Add("b", Mat::Zero(1, 3));
  RestoreParams(Sample(), ps);
  EXPECT_EQ(ps.Get("a").value, Sample().Tensor("a"));
  ParamSet wrong;
  wrong.Add("a", Mat::Zero(2, 2));
  EXPECT_ANY_THROW(RestoreParams(Sample(), wrong));
  Checkpoint out;
  AppendParams(ps, out);
  ASSERT_EQ(out.tensors.size(), 2u);
  EXPECT_EQ(out.tensors[0].first, "a");
}

}  // namespace
}  // namespace xtts
