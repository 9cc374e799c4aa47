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

#ifndef BUDS_DATASET_H_
#define BUDS_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "nlohmann/json_fwd.hpp"

namespace buds {

enum class AttributeKind { kCategorical, kNumeric };

// One column of the input. Categorical attributes carry their dictionary in
// `domain`. Numeric attributes are bucketized by ascending `bin_edges`:
// bucket b covers [edge[b-1], edge[b]) with open ends on both sides, and
// `domain` holds one label per bucket.
struct Attribute {
  std::string name;
  AttributeKind kind = AttributeKind::kCategorical;
  std::vector<std::string> domain;
  std::vector<double> bin_edges;

  bool is_numeric() const { return kind == AttributeKind::kNumeric; }
  bool is_bucketed() const { return is_numeric() && !bin_edges.empty(); }

  // Number of one-hot bits for this attribute.
  std::size_t cardinality() const { return domain.size(); }

  // Bucket index of a raw numeric value. Requires is_bucketed().
  std::size_t BucketOf(double value) const;

  // Position of `label` in the domain, exact match first, then ASCII
  // case-insensitive.
  std::optional<std::size_t> IndexOfLabel(absl::string_view label) const;
};

// Builds a bucketed numeric attribute. When `labels` is empty, labels of the
// form "<18", "[18,40)", ">=40" are generated.
absl::StatusOr<Attribute> MakeNumericAttribute(
    std::string name, std::vector<double> bin_edges,
    std::vector<std::string> labels = {});

class Schema {
 public:
  // Validates unique names, non-empty duplicate-free domains and ascending
  // bin edges.
  Schema() = default;

  static absl::StatusOr<Schema> Create(
      std::vector<Attribute> attributes, std::string id_column = "id",
      std::optional<std::string> time_attribute = std::nullopt);

  // Parses the JSON schema document:
  //   {"id_column": "ID", "time_attribute": "Day",
  //    "attributes": [{"name": "Color", "domain": ["red", "green"]},
  //                   {"name": "Age", "type": "numeric",
  //                    "bin_edges": [18, 40], "labels": [...]}]}
  static absl::StatusOr<Schema> FromJson(const nlohmann::json& json);
  static absl::StatusOr<Schema> Load(const std::string& path);

  const std::vector<Attribute>& attributes() const { return attributes_; }
  const Attribute& attribute(std::size_t index) const {
    return attributes_[index];
  }
  std::size_t size() const { return attributes_.size(); }
  const std::string& id_column() const { return id_column_; }
  const std::optional<std::string>& time_attribute() const {
    return time_attribute_;
  }

  // Case-insensitive attribute lookup.
  std::optional<std::size_t> IndexOf(absl::string_view name) const;

  nlohmann::json ToJson() const;

 private:
  std::vector<Attribute> attributes_;
  std::string id_column_;
  std::optional<std::string> time_attribute_;
};

struct Record {
  std::string id;
  std::vector<std::string> values;

  bool operator==(const Record&) const = default;
};

// Raw rows in file order. Numeric attributes hold the textual number.
class Dataset {
 public:
  static absl::StatusOr<Dataset> Create(Schema schema,
                                        std::vector<Record> rows);

  const Schema& schema() const { return schema_; }
  const std::vector<Record>& rows() const { return rows_; }
  std::size_t num_rows() const { return rows_.size(); }
  std::size_t num_attributes() const { return schema_.size(); }

 private:
  Dataset(Schema schema, std::vector<Record> rows)
      : schema_(std::move(schema)), rows_(std::move(rows)) {}

  Schema schema_;
  std::vector<Record> rows_;
};

// One-hot bit vector; one byte per bit.
using OneHot = std::vector<std::uint8_t>;

// Index of the single high bit, or an error when zero or several bits are
// set.
absl::StatusOr<std::size_t> HotIndex(const OneHot& bits);
OneHot MakeOneHot(std::size_t width, std::size_t hot);

// Column-major one-hot table: columns[a][r] is the bit vector of attribute a
// in row r. Unique IDs are kept beside the columns and never encoded.
struct EncodedDataset {
  Schema schema;
  std::vector<std::string> ids;
  std::vector<std::vector<OneHot>> columns;

  std::size_t num_rows() const { return ids.size(); }
  std::size_t num_attributes() const { return columns.size(); }
};

// Parses a comma-separated file whose first column is the unique ID and whose
// remaining header cells match the schema attribute names in order.
absl::StatusOr<Dataset> LoadCsv(const std::string& path, const Schema& schema);
absl::StatusOr<Dataset> ParseCsv(absl::string_view text, const Schema& schema);

absl::StatusOr<EncodedDataset> OneHotEncode(const Dataset& dataset);

// Inverse of OneHotEncode; bucketed numeric values come back as bucket labels.
absl::StatusOr<Dataset> Decode(const EncodedDataset& encoded);

inline constexpr std::size_t kLargeDomainThreshold = 10000;

// One message per attribute whose one-hot width exceeds `threshold`.
std::vector<std::string> LargeDomainWarnings(
    const Schema& schema, std::size_t threshold = kLargeDomainThreshold);

// Splits one CSV line, honouring double-quoted fields.
absl::StatusOr<std::vector<std::string>> SplitCsvLine(absl::string_view line);

// Quotes a field when it contains a comma, quote or newline.
std::string EscapeCsvField(absl::string_view field);

}  // namespace buds

#endif  // BUDS_DATASET_H_
