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

#ifndef BUDS_QUERY_H_
#define BUDS_QUERY_H_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "buds/dataset.h"

namespace buds {

enum class Comparison { kEq, kLt, kGt, kLe, kGe };

absl::string_view ComparisonSymbol(Comparison op);

struct Predicate {
  std::string attribute;
  Comparison op = Comparison::kEq;
  std::string value;
};

// Inclusive range filter on the schema's time attribute ("during t1..t2").
// An empty `attribute` means "the schema's declared time attribute".
struct TimeHorizon {
  std::string attribute;
  std::string first;
  std::string last;
};

// Conjunctive count query.
struct QuerySpec {
  std::vector<Predicate> predicates;
  std::optional<TimeHorizon> time_horizon;

  // Canonical text form, suitable for echoing in reports.
  std::string ToString() const;
};

// Parses `count where <attr> <op> <value> [and ...] [during <t1>..<t2>]`.
// Keywords are case-insensitive; values may be double-quoted.
absl::StatusOr<QuerySpec> ParseQuery(absl::string_view text);

// A query resolved against a schema: for each constrained attribute, the set
// of admissible one-hot indices. A row matches when every clause accepts it.
struct CompiledQuery {
  struct Clause {
    std::size_t attribute = 0;
    std::vector<bool> accepts;
  };
  std::vector<Clause> clauses;

  bool Matches(const std::vector<std::size_t>& hot_indices) const;
};

// Categorical attributes only admit "="; bucketed numerics and the time
// attribute compare by bucket / domain order.
absl::StatusOr<CompiledQuery> CompileQuery(const QuerySpec& query,
                                           const Schema& schema);

// Canonical names of every attribute referenced by the query, in schema
// order.
absl::StatusOr<std::vector<std::string>> RelevantAttributes(
    const QuerySpec& query, const Schema& schema);

// A set of attributes that is always permuted as one unit.
struct Channel {
  std::string name;
  std::vector<std::size_t> attributes;
};

// The m relevant attributes fused into one composite channel, next to the
// k - m free ones. `channels` has g = k - m + 1 entries in schema order; the
// composite channel takes the position of its first member.
struct TiedDataset {
  EncodedDataset base;
  std::vector<std::string> tied_group;
  std::vector<std::string> free_attributes;
  std::vector<Channel> channels;
  std::size_t tied_channel = 0;

  std::size_t g() const { return channels.size(); }
  std::vector<std::string> ChannelNames() const;
};

absl::StatusOr<TiedDataset> TieAttributes(
    EncodedDataset encoded, const std::vector<std::string>& relevant);

}  // namespace buds

#endif  // BUDS_QUERY_H_
