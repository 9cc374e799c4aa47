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

#include "buds/partition.h"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "buds/status_macros.h"
#include "nlohmann/json.hpp"

namespace buds {
namespace {

constexpr char kGroupLabel[] = "attribute-groups";
constexpr char kAssignLabel[] = "shuffler-assignment";

}  // namespace

std::size_t ShufflePlan::BatchOffset(std::size_t batch) const {
  return std::accumulate(batch_sizes.begin(), batch_sizes.begin() + batch,
                         std::size_t{0});
}

ShufflerAssignment ShufflePlan::AssignmentForBatch(std::size_t batch) const {
  Rng rng(DeriveSeed(seed, kAssignLabel, {batch}));
  // Groups always number S inside a valid plan.
  return *AssignShufflers(attribute_groups, num_shufflers, rng);
}

absl::StatusOr<std::vector<std::size_t>> PlanBatches(std::size_t n,
                                                     std::size_t t) {
  if (t == 0) return absl::InvalidArgumentError("batch count t must be >= 1");
  if (t > n) {
    return absl::InvalidArgumentError(absl::StrCat(
        "batch count t=", t, " exceeds row count n=", n));
  }
  std::vector<std::size_t> sizes(t, n / t);
  for (std::size_t i = 0; i < n % t; ++i) ++sizes[i];
  return sizes;
}

absl::StatusOr<AttributeGroups> GroupAttributes(
    absl::Span<const std::string> channels, int num_shufflers, Rng& rng) {
  if (num_shufflers <= 1) {
    return absl::InvalidArgumentError(absl::StrCat(
        "shuffler count S must be > 1, got ", num_shufflers));
  }
  if (channels.empty()) {
    return absl::InvalidArgumentError("no channels to group");
  }
  const std::size_t s = static_cast<std::size_t>(num_shufflers);
  const std::size_t base = channels.size() / s;
  const std::size_t extra = channels.size() % s;

  // Partial Fisher-Yates: the first `extra` entries are a uniform draw
  // without replacement.
  std::vector<std::size_t> order(s);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < extra; ++i) {
    const std::size_t j = i + rng.UniformBelow(s - i);
    std::swap(order[i], order[j]);
  }
  std::vector<std::size_t> sizes(s, base);
  for (std::size_t i = 0; i < extra; ++i) ++sizes[order[i]];

  AttributeGroups groups(s);
  std::size_t next = 0;
  for (std::size_t j = 0; j < s; ++j) {
    for (std::size_t c = 0; c < sizes[j]; ++c) {
      groups[j].push_back(channels[next++]);
    }
  }
  return groups;
}

absl::StatusOr<ShufflerAssignment> AssignShufflers(
    const AttributeGroups& groups, int num_shufflers, Rng& rng) {
  if (num_shufflers <= 1) {
    return absl::InvalidArgumentError(absl::StrCat(
        "shuffler count S must be > 1, got ", num_shufflers));
  }
  if (groups.size() != static_cast<std::size_t>(num_shufflers)) {
    return absl::InvalidArgumentError(
        absl::StrCat("expected ", num_shufflers, " attribute groups, got ",
                     groups.size()));
  }
  ShufflerAssignment assignment(groups.size());
  std::iota(assignment.begin(), assignment.end(), 0);
  Shuffle(assignment, rng);
  return assignment;
}

absl::StatusOr<ShufflePlan> MakeShufflePlan(
    std::size_t num_rows, std::size_t num_batches,
    absl::Span<const std::string> channels, int num_shufflers,
    std::uint64_t seed) {
  ShufflePlan plan;
  plan.num_rows = num_rows;
  plan.num_shufflers = num_shufflers;
  plan.seed = seed;
  BUDS_ASSIGN_OR_RETURN(plan.batch_sizes, PlanBatches(num_rows, num_batches));
  Rng rng(DeriveSeed(seed, kGroupLabel));
  BUDS_ASSIGN_OR_RETURN(plan.attribute_groups,
                        GroupAttributes(channels, num_shufflers, rng));
  plan.remainder = channels.size() % static_cast<std::size_t>(num_shufflers);
  return plan;
}

nlohmann::json PlanToJson(const ShufflePlan& plan) {
  nlohmann::json json;
  json["n"] = plan.num_rows;
  json["S"] = plan.num_shufflers;
  json["t"] = plan.num_batches();
  json["n1"] = plan.n1();
  json["n1_convention"] = "largest batch (ceil(n/t))";
  json["batch_sizes"] = plan.batch_sizes;
  json["attribute_groups"] = plan.attribute_groups;
  json["remainder_e"] = plan.remainder;
  json["seed"] = plan.seed;
  nlohmann::json assignments = nlohmann::json::array();
  for (std::size_t b = 0; b < plan.num_batches(); ++b) {
    assignments.push_back(plan.AssignmentForBatch(b));
  }
  json["shuffler_assignments"] = std::move(assignments);
  return json;
}

std::string PlanDigest(const ShufflePlan& plan) {
  const std::string canonical = PlanToJson(plan).dump();
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) hash = (hash ^ c) * 0x100000001b3ULL;
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(hash));
  return buffer;
}

}  // namespace buds
