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

#ifndef BUDS_SHUFFLER_H_
#define BUDS_SHUFFLER_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "buds/dataset.h"
#include "buds/partition.h"
#include "buds/query.h"
#include "buds/random.h"

namespace buds {

enum class ShuffleMode {
  kIterative,   // IS: every batch is permuted on its own rows
  kCumulative,  // CIS: stage i permutes the union of batches 1..i
};

absl::string_view ShuffleModeName(ShuffleMode mode);

// Output database. Row slots keep their unique IDs; attribute values have
// been permuted channel-group-wise underneath them.
struct ShuffledDataset {
  EncodedDataset table;
  std::vector<Channel> channels;
  AttributeGroups groups;
  ShuffleMode mode = ShuffleMode::kIterative;
  std::uint64_t seed = 0;
  std::string plan_digest;
};

struct ShuffleOptions {
  // Worker threads for IS; batches are independent. Results do not depend
  // on this value.
  int num_threads = 1;
};

// One permutation per attribute group for batch (IS) or stage (CIS)
// `batch_index`. Group j takes the permutation of the shuffler it is
// assigned to, and every shuffler draws from its own derived stream.
std::vector<Permutation> BatchPermutations(const ShufflePlan& plan,
                                           std::size_t batch_index,
                                           std::size_t num_rows,
                                           ShuffleMode mode);

// Permutes a single batch given as its own table.
absl::StatusOr<EncodedDataset> ShuffleBatch(const EncodedDataset& batch,
                                            const std::vector<Channel>& channels,
                                            const ShufflePlan& plan,
                                            std::size_t batch_index,
                                            ShuffleMode mode);

absl::StatusOr<ShuffledDataset> IterativeShuffle(const TiedDataset& tied,
                                                 const ShufflePlan& plan,
                                                 const ShuffleOptions& options = {});

absl::StatusOr<ShuffledDataset> CumulativeIterativeShuffle(
    const TiedDataset& tied, const ShufflePlan& plan);

// Single whole-table shuffle with caller-supplied permutations, one per
// group. Used to replay a known arrangement.
absl::StatusOr<ShuffledDataset> ApplyGroupPermutations(
    const TiedDataset& tied, const AttributeGroups& groups,
    const std::vector<Permutation>& permutations);

// Writes decoded slots as CSV and a `<path>.provenance.json` sidecar holding
// seed, plan digest, mode and the channel groups.
absl::Status ExportShuffledCsv(const ShuffledDataset& shuffled,
                               const std::string& path);

}  // namespace buds

#endif  // BUDS_SHUFFLER_H_
