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

#ifndef BUDS_RANDOM_H_
#define BUDS_RANDOM_H_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <vector>

#include "absl/strings/string_view.h"

namespace buds {

// Destination-indexed permutation: slot j of the output receives the element
// at position perm[j] of the input.
using Permutation = std::vector<std::size_t>;

// Derives an independent 64-bit stream seed from a base seed, a purpose
// label and a tuple of indices. Every random draw in the library is keyed
// this way so results never depend on evaluation order.
std::uint64_t DeriveSeed(std::uint64_t seed, absl::string_view label,
                         std::initializer_list<std::uint64_t> indices = {});

// xoshiro256** seeded through SplitMix64. Satisfies
// std::uniform_random_bit_generator, but the library only draws through
// UniformBelow() so streams are identical across standard libraries.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() { return Next(); }
  std::uint64_t Next();

  // Unbiased integer in [0, bound). `bound` must be positive.
  std::uint64_t UniformBelow(std::uint64_t bound);

  // Uniform double in [0, 1).
  double UniformDouble();

 private:
  std::uint64_t state_[4];
};

// Uniformly random permutation of {0, ..., size-1} (Fisher-Yates).
Permutation RandomPermutation(std::size_t size, Rng& rng);

// In-place Fisher-Yates shuffle.
template <typename T>
void Shuffle(std::vector<T>& values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const std::size_t j = rng.UniformBelow(i);
    using std::swap;
    swap(values[i - 1], values[j]);
  }
}

// True iff `perm` contains every index in [0, perm.size()) exactly once.
bool IsPermutation(const Permutation& perm);

}  // namespace buds

#endif  // BUDS_RANDOM_H_
