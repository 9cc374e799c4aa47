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

#include <numeric>

namespace buds {
namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t SplitMix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t Mix(std::uint64_t acc, std::uint64_t value) {
  std::uint64_t state = acc ^ value;
  return SplitMix64(state);
}

std::uint64_t Rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

std::uint64_t DeriveSeed(std::uint64_t seed, absl::string_view label,
                         std::initializer_list<std::uint64_t> indices) {
  std::uint64_t label_hash = kFnvOffset;
  for (unsigned char c : label) {
    label_hash = (label_hash ^ c) * kFnvPrime;
  }
  std::uint64_t acc = Mix(seed, label_hash);
  // Fold in the tuple length so {a} and {a, 0} differ.
  acc = Mix(acc, indices.size());
  for (std::uint64_t index : indices) acc = Mix(acc, index);
  return acc;
}

Rng::Rng(std::uint64_t seed) {
  std::uint64_t sm = seed;
  for (auto& word : state_) word = SplitMix64(sm);
}

std::uint64_t Rng::Next() {
  const std::uint64_t result = Rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = Rotl(state_[3], 45);
  return result;
}

// Lemire's nearly-divisionless bounded sampling.
std::uint64_t Rng::UniformBelow(std::uint64_t bound) {
  unsigned __int128 product =
      static_cast<unsigned __int128>(Next()) * bound;
  std::uint64_t low = static_cast<std::uint64_t>(product);
  if (low < bound) {
    const std::uint64_t threshold = -bound % bound;
    while (low < threshold) {
      product = static_cast<unsigned __int128>(Next()) * bound;
      low = static_cast<std::uint64_t>(product);
    }
  }
  return static_cast<std::uint64_t>(product >> 64);
}

double Rng::UniformDouble() {
  return static_cast<double>(Next() >> 11) * 0x1.0p-53;
}

Permutation RandomPermutation(std::size_t size, Rng& rng) {
  Permutation perm(size);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Shuffle(perm, rng);
  return perm;
}

bool IsPermutation(const Permutation& perm) {
  std::vector<bool> seen(perm.size(), false);
  for (std::size_t index : perm) {
    if (index >= perm.size() || seen[index]) return false;
    seen[index] = true;
  }
  return true;
}

}  // namespace buds
