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

#include "xtts/kvconfig.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.h"

namespace xtts {
namespace {

TEST(KvConfig, ParsesCommentsAndWhitespace) {
  const KvConfig kv = KvConfig::Parse("# comment\n\n  a = 1 \nb=two words\nc = 0.5\nlist = 1, 2,3\n");
  EXPECT_EQ(kv.GetInt("a", 0), 1);
  EXPECT_EQ(kv.GetString("b", ""), "two words");
  EXPECT_DOUBLE_EQ(kv.GetDouble("c", 0.0), 0.5);
  EXPECT_EQ(kv.GetIntList("list", {}), (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(kv.GetInt("missing", 9), 9);
}

TEST(KvConfig, RejectsMalformedInput) {
  EXPECT_THROW(KvConfig::Parse("no equals sign\n"), std::invalid_argument);
  const KvConfig kv = KvConfig::Parse("x = abc\nl = 1,b\n");
  EXPECT_THROW(kv.GetInt("x", 0), std::invalid_argument);
  EXPECT_THROW(kv.GetDouble("x", 0.0), std::invalid_argument);
  EXPECT_THROW(kv.GetIntList("l", {}), std::invalid_argument);
}

TEST(KvConfig, SerialisationIsSortedAndRoundTrips) {
  KvConfig kv;
  kv.Set("zeta", 1);
  kv.Set("alpha", 0.1);
  kv.Set("mid", std::string("x"));
  const std::string text = kv.ToString();
  EXPECT_LT(text.find("alpha"), text.find("mid"));
  EXPECT_LT(text.find("mid"), text.find("zeta"));
  EXPECT_EQ(KvConfig::Parse(text).ToString(), text);
}

TEST(KvConfig, FormatDoubleRoundTripsRandomValues) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> exp(-300.0, 300.0);
  std::normal_distribution<double> g;
  for (int i = 0; i < 1000; ++i) {
    const double v = g(rng) * std::pow(10.0, exp(rng));
    KvConfig kv;
    kv.Set("v", v);
    EXPECT_EQ(KvConfig::Parse(kv.ToString()).GetDouble("v", 0.0), v);
  }
}

TEST(KvConfig, MergeSubsetAndPrefix) {
  KvConfig base = KvConfig::Parse("a = 1\ntrain.lr = 0.1\ntrain.steps = 5\nother = 2\n");
  base.Merge(KvConfig::Parse("a = 3\nnew = 4\n"));
  EXPECT_EQ(base.GetInt("a", 0), 3);
  EXPECT_EQ(base.GetInt("new", 0), 4);
  const KvConfig sub = base.Subset("train.");
  EXPECT_EQ(sub.entries().size(), 2u);
  EXPECT_EQ(sub.GetInt("steps", 0), 5);
  KvConfig back;
  back.MergePrefixed("train.", sub);
  EXPECT_EQ(back.ToString(), "train.lr = 0.1\ntrain.steps = 5\n");
}

TEST(KvConfig, FileRoundTrip) {
  const std::string dir = testing::TempDir("kv");
  KvConfig kv;
  kv.Set("seed", 42);
  kv.Save(dir + "/c.cfg");
  EXPECT_EQ(KvConfig::Load(dir + "/c.cfg").GetInt("seed", 0), 42);
  EXPECT_ANY_THROW(KvConfig::Load(dir + "/absent.cfg"));
}

}  // namespace
}  // namespace xtts
