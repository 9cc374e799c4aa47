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

#ifndef BUDS_PARTITION_H_
#define BUDS_PARTITION_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/types/span.h"
#include "buds/random.h"
#include "nlohmann/json_fwd.hpp"

namespace buds {

using AttributeGroups = std::vector<std::vector<std::string>>;

// assignment[j] is the shuffler (0-based) that permutes attribute group j.
using ShufflerAssignment = std::vector<int>;

// How the rows and channels of one run are split up. Fully determined by
// (n, t, channel list, S, seed).
struct ShufflePlan {
  std::size_t num_rows = 0;
  int num_shufflers = 0;
  std::vector<std::size_t> batch_sizes;
  AttributeGroups attribute_groups;
  std::size_t remainder = 0;  // g mod S
  std::uint64_t seed = 0;

  std::size_t num_batches() const { return batch_sizes.size(); }
  // Largest batch; this is the n1 used for privacy accounting.
  std::size_t n1() const { return batch_sizes.empty() ? 0 : batch_sizes[0]; }
  // Offset of the first row of `batch`.
  std::size_t BatchOffset(std::size_t batch) const;

  // Group-to-shuffler bijection for one batch, re-drawn independently per
  // batch from the plan seed.
  ShufflerAssignment AssignmentForBatch(std::size_t batch) const;
};

// t near-equal batch sizes summing to n; the first n mod t batches get one
// extra row.
absl::StatusOr<std::vector<std::size_t>> PlanBatches(std::size_t n,
                                                     std::size_t t);

// Partitions the channels into S groups of floor(g/S) channels each, then
// hands the g mod S leftover channels to distinct groups chosen uniformly
// without replacement. Channel order is preserved inside each group.
absl::StatusOr<AttributeGroups> GroupAttributes(
    absl::Span<const std::string> channels, int num_shufflers, Rng& rng);

// Uniform bijection from the groups to the S shufflers.
absl::StatusOr<ShufflerAssignment> AssignShufflers(
    const AttributeGroups& groups, int num_shufflers, Rng& rng);

absl::StatusOr<ShufflePlan> MakeShufflePlan(
    std::size_t num_rows, std::size_t num_batches,
    absl::Span<const std::string> channels, int num_shufflers,
    std::uint64_t seed);

// Audit form; includes every per-batch shuffler assignment.
nlohmann::json PlanToJson(const ShufflePlan& plan);

// Hex FNV-1a digest of the canonical audit JSON.
std::string PlanDigest(const ShufflePlan& plan);

}  // namespace buds

#endif  // BUDS_PARTITION_H_
