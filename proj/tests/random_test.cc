// Copyright 2026 The BUDS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "buds/random.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "gmock/gmock.h"
#include "gtest/gtest.h"

namespace buds {
namespace {

TEST(DeriveSeedTest, DependsOnEveryComponent) {
  const std::uint64_t base = DeriveSeed(1, "label", {2, 3});
  EXPECT_EQ(base, DeriveSeed(1, "label", {2, 3}));
  EXPECT_NE(base, DeriveSeed(2, "label", {2, 3}));
  EXPECT_NE(base, DeriveSeed(1, "other", {2, 3}));
  EXPECT_NE(base, DeriveSeed(1, "label", {3, 2}));
  EXPECT_NE(base, DeriveSeed(1, "label", {2, 3, 0}));
  EXPECT_NE(DeriveSeed(1, "label"), DeriveSeed(1, "label", {0}));
}

TEST(RngTest, SameSeedSameStream) {
  Rng a(99), b(99), c(100);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const std::uint64_t x = a.Next();
    EXPECT_EQ(x, b.Next());
    differs |= x != c.Next();
  }
  EXPECT_TRUE(differs);
}

TEST(RngTest, UniformBelowStaysInRange) {
  Rng rng(5);
  for (std::uint64_t bound : {1ULL, 2ULL, 3ULL, 7ULL, 1000ULL, (1ULL << 63) + 5}) {
    for (int i = 0; i < 1000; ++i) EXPECT_LT(rng.UniformBelow(bound), bound);
  }
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.UniformDouble();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(RandomPermutationTest, ProducesPermutations) {
  Rng rng(11);
  for (std::size_t size : {0u, 1u, 2u, 5u, 100u}) {
    Permutation perm = RandomPermutation(size, rng);
    EXPECT_EQ(perm.size(), size);
    EXPECT_TRUE(IsPermutation(perm));
  }
  EXPECT_FALSE(IsPermutation({0, 0, 1}));
  EXPECT_FALSE(IsPermutation({0, 3, 1}));
}

// Chi-square goodness of fit over the 24 permutations of 4 elements.
TEST(RandomPermutationTest, UniformOverAllArrangements) {
  constexpr int kTrials = 240000;
  std::map<Permutation, int> counts;
  for (int trial = 0; trial < kTrials; ++trial) {
    Rng rng(DeriveSeed(3, "perm-uniformity", {static_cast<std::uint64_t>(trial)}));
    ++counts[RandomPermutation(4, rng)];
  }
  ASSERT_EQ(counts.size(), 24u);
  const double expected = kTrials / 24.0;
  double chi2 = 0;
  for (const auto& [perm, count] : counts) {
    chi2 += (count - expected) * (count - expected) / expected;
  }
  // 23 degrees of freedom; the 0.999 quantile is 49.7.
  EXPECT_LT(chi2, 49.7);
}

}  // namespace
}  // namespace buds
