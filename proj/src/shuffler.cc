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

#include "buds/shuffler.h"

#include <algorithm>
#include <fstream>
#include <thread>
#include <unordered_map>
#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "buds/status_macros.h"
#include "nlohmann/json.hpp"

namespace buds {
namespace {

using Columns = std::vector<std::vector<OneHot>>;

absl::string_view StreamLabel(ShuffleMode mode) {
  return mode == ShuffleMode::kIterative ? "is-shuffle" : "cis-shuffle";
}

// Attribute indices moved together by each group.
absl::StatusOr<std::vector<std::vector<std::size_t>>> GroupAttributeIndices(
    const std::vector<Channel>& channels, const AttributeGroups& groups) {
  std::unordered_map<std::string, const Channel*> by_name;
  for (const Channel& channel : channels) by_name[channel.name] = &channel;
  std::vector<bool> covered(channels.size(), false);
  std::vector<std::vector<std::size_t>> indices(groups.size());
  for (std::size_t j = 0; j < groups.size(); ++j) {
    for (const std::string& name : groups[j]) {
      auto it = by_name.find(name);
      if (it == by_name.end()) {
        return absl::InvalidArgumentError(
            absl::StrCat("plan names unknown channel '", name, "'"));
      }
      const std::size_t position = it->second - channels.data();
      if (covered[position]) {
        return absl::InvalidArgumentError(
            absl::StrCat("channel '", name, "' appears in two groups"));
      }
      covered[position] = true;
      indices[j].insert(indices[j].end(), it->second->attributes.begin(),
                        it->second->attributes.end());
    }
  }
  if (std::find(covered.begin(), covered.end(), false) != covered.end()) {
    return absl::InvalidArgumentError("plan groups do not cover every channel");
  }
  return indices;
}

// dst[a][offset + j] = src[a][offset + perm[j]] for every attribute of every
// group.
void PermuteRange(const Columns& src, Columns& dst, std::size_t offset,
                  const std::vector<std::vector<std::size_t>>& group_attributes,
                  const std::vector<Permutation>& permutations) {
  for (std::size_t j = 0; j < group_attributes.size(); ++j) {
    const Permutation& perm = permutations[j];
    for (std::size_t a : group_attributes[j]) {
      for (std::size_t slot = 0; slot < perm.size(); ++slot) {
        dst[a][offset + slot] = src[a][offset + perm[slot]];
      }
    }
  }
}

absl::Status CheckPlanMatches(const TiedDataset& tied, const ShufflePlan& plan) {
  if (plan.num_rows != tied.base.num_rows()) {
    return absl::InvalidArgumentError(
        absl::StrCat("plan covers ", plan.num_rows, " rows but dataset has ",
                     tied.base.num_rows()));
  }
  std::size_t total = 0;
  for (std::size_t size : plan.batch_sizes) total += size;
  if (total != plan.num_rows || plan.batch_sizes.empty()) {
    return absl::InvalidArgumentError("plan batch sizes do not sum to n");
  }
  if (plan.attribute_groups.size() !=
      static_cast<std::size_t>(plan.num_shufflers)) {
    return absl::InvalidArgumentError("plan must have one group per shuffler");
  }
  return absl::OkStatus();
}

ShuffledDataset MakeShell(const TiedDataset& tied, const ShufflePlan& plan,
                          ShuffleMode mode) {
  ShuffledDataset out;
  out.channels = tied.channels;
  out.groups = plan.attribute_groups;
  out.mode = mode;
  out.seed = plan.seed;
  out.plan_digest = PlanDigest(plan);
  return out;
}

}  // namespace

absl::string_view ShuffleModeName(ShuffleMode mode) {
  return mode == ShuffleMode::kIterative ? "IS" : "CIS";
}

std::vector<Permutation> BatchPermutations(const ShufflePlan& plan,
                                           std::size_t batch_index,
                                           std::size_t num_rows,
                                           ShuffleMode mode) {
  const ShufflerAssignment assignment = plan.AssignmentForBatch(batch_index);
  std::vector<Permutation> permutations;
  permutations.reserve(assignment.size());
  for (int shuffler : assignment) {
    Rng rng(DeriveSeed(plan.seed, StreamLabel(mode),
                       {batch_index, static_cast<std::uint64_t>(shuffler)}));
    permutations.push_back(RandomPermutation(num_rows, rng));
  }
  return permutations;
}

absl::StatusOr<EncodedDataset> ShuffleBatch(const EncodedDataset& batch,
                                            const std::vector<Channel>& channels,
                                            const ShufflePlan& plan,
                                            std::size_t batch_index,
                                            ShuffleMode mode) {
  if (batch.num_rows() == 0) {
    return absl::InvalidArgumentError("cannot shuffle an empty batch");
  }
  if (batch_index >= plan.num_batches()) {
    return absl::OutOfRangeError(
        absl::StrCat("batch index ", batch_index, " outside plan"));
  }
  BUDS_ASSIGN_OR_RETURN(auto group_attributes,
                        GroupAttributeIndices(channels, plan.attribute_groups));
  EncodedDataset out = batch;
  PermuteRange(batch.columns, out.columns, 0, group_attributes,
               BatchPermutations(plan, batch_index, batch.num_rows(), mode));
  return out;
}

absl::StatusOr<ShuffledDataset> IterativeShuffle(const TiedDataset& tied,
                                                 const ShufflePlan& plan,
                                                 const ShuffleOptions& options) {
  BUDS_RETURN_IF_ERROR(CheckPlanMatches(tied, plan));
  BUDS_ASSIGN_OR_RETURN(
      auto group_attributes,
      GroupAttributeIndices(tied.channels, plan.attribute_groups));

  ShuffledDataset out = MakeShell(tied, plan, ShuffleMode::kIterative);
  out.table = tied.base;
  const Columns& src = tied.base.columns;
  Columns& dst = out.table.columns;

  std::vector<std::size_t> offsets(plan.num_batches());
  for (std::size_t b = 1; b < offsets.size(); ++b) {
    offsets[b] = offsets[b - 1] + plan.batch_sizes[b - 1];
  }
  // Batches write disjoint row ranges, so workers never touch the same cell.
  auto run_batches = [&](std::size_t first, std::size_t step) {
    for (std::size_t b = first; b < plan.num_batches(); b += step) {
      PermuteRange(src, dst, offsets[b], group_attributes,
                   BatchPermutations(plan, b, plan.batch_sizes[b],
                                     ShuffleMode::kIterative));
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::max(options.num_threads, 1)), 1,
      plan.num_batches());
  if (workers == 1) {
    run_batches(0, 1);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back(run_batches, w, workers);
    }
    for (std::thread& thread : threads) thread.join();
  }
  return out;
}

absl::StatusOr<ShuffledDataset> CumulativeIterativeShuffle(
    const TiedDataset& tied, const ShufflePlan& plan) {
  BUDS_RETURN_IF_ERROR(CheckPlanMatches(tied, plan));
  BUDS_ASSIGN_OR_RETURN(
      auto group_attributes,
      GroupAttributeIndices(tied.channels, plan.attribute_groups));

  ShuffledDataset out = MakeShell(tied, plan, ShuffleMode::kCumulative);
  out.table = tied.base;
  Columns scratch = tied.base.columns;
  std::size_t prefix = 0;
  for (std::size_t stage = 0; stage < plan.num_batches(); ++stage) {
    prefix += plan.batch_sizes[stage];
    PermuteRange(out.table.columns, scratch, 0, group_attributes,
                 BatchPermutations(plan, stage, prefix,
                                   ShuffleMode::kCumulative));
    for (std::size_t a = 0; a < scratch.size(); ++a) {
      std::copy(scratch[a].begin(), scratch[a].begin() + prefix,
                out.table.columns[a].begin());
    }
  }
  return out;
}

absl::StatusOr<ShuffledDataset> ApplyGroupPermutations(
    const TiedDataset& tied, const AttributeGroups& groups,
    const std::vector<Permutation>& permutations) {
  if (permutations.size() != groups.size()) {
    return absl::InvalidArgumentError("need exactly one permutation per group");
  }
  for (const Permutation& perm : permutations) {
    if (perm.size() != tied.base.num_rows() || !IsPermutation(perm)) {
      return absl::InvalidArgumentError(
          "each permutation must reorder every row exactly once");
    }
  }
  BUDS_ASSIGN_OR_RETURN(auto group_attributes,
                        GroupAttributeIndices(tied.channels, groups));
  ShuffledDataset out;
  out.channels = tied.channels;
  out.groups = groups;
  out.table = tied.base;
  out.plan_digest = "explicit";
  PermuteRange(tied.base.columns, out.table.columns, 0, group_attributes,
               permutations);
  return out;
}

absl::Status ExportShuffledCsv(const ShuffledDataset& shuffled,
                               const std::string& path) {
  BUDS_ASSIGN_OR_RETURN(Dataset decoded, Decode(shuffled.table));
  std::ofstream csv(path, std::ios::binary);
  if (!csv) return absl::UnavailableError(absl::StrCat("cannot write ", path));
  std::vector<std::string> header{EscapeCsvField(decoded.schema().id_column())};
  for (const Attribute& attribute : decoded.schema().attributes()) {
    header.push_back(EscapeCsvField(attribute.name));
  }
  csv << absl::StrJoin(header, ",") << "\n";
  for (const Record& record : decoded.rows()) {
    std::vector<std::string> fields{EscapeCsvField(record.id)};
    for (const std::string& value : record.values) {
      fields.push_back(EscapeCsvField(value));
    }
    csv << absl::StrJoin(fields, ",") << "\n";
  }

  nlohmann::json provenance;
  provenance["seed"] = shuffled.seed;
  provenance["plan_digest"] = shuffled.plan_digest;
  provenance["mode"] = std::string(ShuffleModeName(shuffled.mode));
  provenance["attribute_groups"] = shuffled.groups;
  std::ofstream sidecar(path + ".provenance.json");
  if (!sidecar) {
    return absl::UnavailableError(
        absl::StrCat("cannot write ", path, ".provenance.json"));
  }
  sidecar << provenance.dump(2) << "\n";
  if (!csv || !sidecar) return absl::DataLossError("short write");
  return absl::OkStatus();
}

}  // namespace buds
