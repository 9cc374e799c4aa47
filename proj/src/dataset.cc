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

#include "buds/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/ascii.h"
#include "absl/strings/match.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "buds/status_macros.h"
#include "nlohmann/json.hpp"

namespace buds {
namespace {

std::string FormatEdge(double value) {
  std::ostringstream out;
  out << value;
  return out.str();
}

std::optional<double> ParseNumber(absl::string_view text) {
  text = absl::StripAsciiWhitespace(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() ||
      !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

// Domain index of a raw cell value, or nullopt when it is not admissible.
std::optional<std::size_t> EncodeValue(const Attribute& attribute,
                                       absl::string_view raw) {
  if (attribute.is_numeric()) {
    if (std::optional<double> number = ParseNumber(raw)) {
      if (!attribute.is_bucketed()) return std::nullopt;
      return attribute.BucketOf(*number);
    }
    // Already-bucketed values (e.g. decoded output) are accepted by label.
    if (attribute.is_bucketed()) {
      for (std::size_t i = 0; i < attribute.domain.size(); ++i) {
        if (attribute.domain[i] == raw) return i;
      }
    }
    return std::nullopt;
  }
  for (std::size_t i = 0; i < attribute.domain.size(); ++i) {
    if (attribute.domain[i] == raw) return i;
  }
  return std::nullopt;
}

bool IsAdmissible(const Attribute& attribute, absl::string_view raw) {
  if (attribute.is_numeric() && !attribute.is_bucketed()) {
    return ParseNumber(raw).has_value();
  }
  return EncodeValue(attribute, raw).has_value();
}

}  // namespace

std::size_t Attribute::BucketOf(double value) const {
  return static_cast<std::size_t>(
      std::upper_bound(bin_edges.begin(), bin_edges.end(), value) -
      bin_edges.begin());
}

std::optional<std::size_t> Attribute::IndexOfLabel(
    absl::string_view label) const {
  for (std::size_t i = 0; i < domain.size(); ++i) {
    if (domain[i] == label) return i;
  }
  for (std::size_t i = 0; i < domain.size(); ++i) {
    if (absl::EqualsIgnoreCase(domain[i], label)) return i;
  }
  return std::nullopt;
}

absl::StatusOr<Attribute> MakeNumericAttribute(std::string name,
                                               std::vector<double> bin_edges,
                                               std::vector<std::string> labels) {
  Attribute attribute;
  attribute.name = std::move(name);
  attribute.kind = AttributeKind::kNumeric;
  if (!std::is_sorted(bin_edges.begin(), bin_edges.end()) ||
      std::adjacent_find(bin_edges.begin(), bin_edges.end()) !=
          bin_edges.end()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "bin edges of attribute '", attribute.name,
        "' must be strictly ascending"));
  }
  if (bin_edges.empty()) {
    // Numeric without a bucketing rule; rejected later by OneHotEncode.
    if (!labels.empty()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "attribute '", attribute.name, "' has labels but no bin edges"));
    }
    return attribute;
  }
  if (labels.empty()) {
    labels.push_back(absl::StrCat("<", FormatEdge(bin_edges.front())));
    for (std::size_t i = 1; i < bin_edges.size(); ++i) {
      labels.push_back(absl::StrCat("[", FormatEdge(bin_edges[i - 1]), ",",
                                    FormatEdge(bin_edges[i]), ")"));
    }
    labels.push_back(absl::StrCat(">=", FormatEdge(bin_edges.back())));
  }
  if (labels.size() != bin_edges.size() + 1) {
    return absl::InvalidArgumentError(absl::StrCat(
        "attribute '", attribute.name, "' needs ", bin_edges.size() + 1,
        " bucket labels, got ", labels.size()));
  }
  attribute.bin_edges = std::move(bin_edges);
  attribute.domain = std::move(labels);
  return attribute;
}

absl::StatusOr<Schema> Schema::Create(
    std::vector<Attribute> attributes, std::string id_column,
    std::optional<std::string> time_attribute) {
  std::unordered_set<std::string> names;
  for (const Attribute& attribute : attributes) {
    if (attribute.name.empty()) {
      return absl::InvalidArgumentError("attribute name must not be empty");
    }
    if (!names.insert(absl::AsciiStrToLower(attribute.name)).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate attribute name '", attribute.name, "'"));
    }
    const bool needs_domain = !attribute.is_numeric() || attribute.is_bucketed();
    if (needs_domain && attribute.domain.empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat("domain of attribute '", attribute.name, "' is empty"));
    }
    std::unordered_set<std::string> values(attribute.domain.begin(),
                                           attribute.domain.end());
    if (values.size() != attribute.domain.size()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "domain of attribute '", attribute.name, "' has duplicates"));
    }
    if (attribute.is_bucketed() &&
        attribute.domain.size() != attribute.bin_edges.size() + 1) {
      return absl::InvalidArgumentError(absl::StrCat(
          "attribute '", attribute.name, "' bucket count mismatch"));
    }
  }
  Schema schema;
  schema.attributes_ = std::move(attributes);
  schema.id_column_ = std::move(id_column);
  if (time_attribute.has_value()) {
    const std::optional<std::size_t> index = schema.IndexOf(*time_attribute);
    if (!index.has_value()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "time attribute '", *time_attribute, "' is not in the schema"));
    }
    schema.time_attribute_ = schema.attributes_[*index].name;
  }
  return schema;
}

absl::StatusOr<Schema> Schema::FromJson(const nlohmann::json& json) {
  if (!json.is_object() || !json.contains("attributes") ||
      !json["attributes"].is_array()) {
    return absl::InvalidArgumentError(
        "schema must be an object with an 'attributes' array");
  }
  std::vector<Attribute> attributes;
  try {
    for (const nlohmann::json& entry : json["attributes"]) {
      const std::string name = entry.at("name").get<std::string>();
      const std::string type = entry.value("type", std::string("categorical"));
      if (type == "numeric") {
        BUDS_ASSIGN_OR_RETURN(
            Attribute attribute,
            MakeNumericAttribute(
                name,
                entry.value("bin_edges", std::vector<double>{}),
                entry.value("labels", std::vector<std::string>{})));
        attributes.push_back(std::move(attribute));
      } else if (type == "categorical") {
        Attribute attribute;
        attribute.name = name;
        attribute.domain = entry.at("domain").get<std::vector<std::string>>();
        attributes.push_back(std::move(attribute));
      } else {
        return absl::InvalidArgumentError(
            absl::StrCat("attribute '", name, "' has unknown type '", type,
                         "'"));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed schema: ", e.what()));
  }
  std::optional<std::string> time_attribute;
  if (json.contains("time_attribute") && json["time_attribute"].is_string()) {
    time_attribute = json["time_attribute"].get<std::string>();
  }
  return Create(std::move(attributes), json.value("id_column", std::string("id")),
                std::move(time_attribute));
}

absl::StatusOr<Schema> Schema::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  nlohmann::json json = nlohmann::json::parse(in, nullptr, false);
  if (json.is_discarded()) {
    return absl::InvalidArgumentError(absl::StrCat(path, " is not valid JSON"));
  }
  return FromJson(json);
}

std::optional<std::size_t> Schema::IndexOf(absl::string_view name) const {
  for (std::size_t i = 0; i < attributes_.size(); ++i) {
    if (absl::EqualsIgnoreCase(attributes_[i].name, name)) return i;
  }
  return std::nullopt;
}

nlohmann::json Schema::ToJson() const {
  nlohmann::json json;
  json["id_column"] = id_column_;
  if (time_attribute_) json["time_attribute"] = *time_attribute_;
  json["attributes"] = nlohmann::json::array();
  for (const Attribute& attribute : attributes_) {
    nlohmann::json entry;
    entry["name"] = attribute.name;
    if (attribute.is_numeric()) {
      entry["type"] = "numeric";
      entry["bin_edges"] = attribute.bin_edges;
      entry["labels"] = attribute.domain;
    } else {
      entry["domain"] = attribute.domain;
    }
    json["attributes"].push_back(std::move(entry));
  }
  return json;
}

absl::StatusOr<Dataset> Dataset::Create(Schema schema,
                                        std::vector<Record> rows) {
  std::unordered_set<std::string> ids;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Record& record = rows[r];
    if (!ids.insert(record.id).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate unique ID '", record.id, "' at row ", r + 1));
    }
    if (record.values.size() != schema.size()) {
      return absl::InvalidArgumentError(
          absl::StrCat("row ", r + 1, " has ", record.values.size(),
                       " values, expected ", schema.size()));
    }
    for (std::size_t a = 0; a < schema.size(); ++a) {
      if (!IsAdmissible(schema.attribute(a), record.values[a])) {
        return absl::InvalidArgumentError(absl::StrCat(
            "row ", r + 1, ": value '", record.values[a],
            "' is outside the domain of attribute '",
            schema.attribute(a).name, "'"));
      }
    }
  }
  return Dataset(std::move(schema), std::move(rows));
}

absl::StatusOr<std::size_t> HotIndex(const OneHot& bits) {
  std::optional<std::size_t> hot;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == 0) continue;
    if (bits[i] != 1 || hot.has_value()) {
      return absl::InvalidArgumentError("illegal one-hot encoding: "
                                        "more than one high bit");
    }
    hot = i;
  }
  if (!hot.has_value()) {
    return absl::InvalidArgumentError(
        "illegal one-hot encoding: no high bit");
  }
  return *hot;
}

OneHot MakeOneHot(std::size_t width, std::size_t hot) {
  OneHot bits(width, 0);
  bits[hot] = 1;
  return bits;
}

absl::StatusOr<std::vector<std::string>> SplitCsvLine(absl::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  bool field_was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"' && current.empty() && !field_was_quoted) {
      quoted = true;
      field_was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
      field_was_quoted = false;
    } else {
      current.push_back(c);
    }
  }
  if (quoted) return absl::InvalidArgumentError("unterminated quoted field");
  fields.push_back(std::move(current));
  return fields;
}

std::string EscapeCsvField(absl::string_view field) {
  if (field.find_first_of(",\"\n\r") == absl::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

absl::StatusOr<Dataset> ParseCsv(absl::string_view text, const Schema& schema) {
  std::vector<absl::string_view> lines = absl::StrSplit(text, '\n');
  for (absl::string_view& line : lines) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) return absl::InvalidArgumentError("missing header row");

  absl::string_view header_line = lines.front();
  if (absl::StartsWith(header_line, "\xEF\xBB\xBF")) header_line.remove_prefix(3);
  BUDS_ASSIGN_OR_RETURN(std::vector<std::string> header,
                        SplitCsvLine(header_line));
  if (header.size() != schema.size() + 1) {
    return absl::InvalidArgumentError(absl::StrCat(
        "header has ", header.size(), " columns, expected ID column plus ",
        schema.size(), " attributes"));
  }
  for (std::size_t a = 0; a < schema.size(); ++a) {
    if (absl::StripAsciiWhitespace(header[a + 1]) != schema.attribute(a).name) {
      return absl::InvalidArgumentError(absl::StrCat(
          "header mismatch at column ", a + 2, ": expected '",
          schema.attribute(a).name, "', got '", header[a + 1], "'"));
    }
  }

  std::vector<Record> rows;
  rows.reserve(lines.size() - 1);
  for (std::size_t l = 1; l < lines.size(); ++l) {
    if (lines[l].empty()) continue;
    BUDS_ASSIGN_OR_RETURN(std::vector<std::string> fields,
                          SplitCsvLine(lines[l]));
    if (fields.size() != schema.size() + 1) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", l + 1, " has ", fields.size(),
                       " columns, expected ", schema.size() + 1));
    }
    Record record;
    record.id = std::move(fields[0]);
    record.values.assign(std::make_move_iterator(fields.begin() + 1),
                         std::make_move_iterator(fields.end()));
    rows.push_back(std::move(record));
  }
  return Dataset::Create(schema, std::move(rows));
}

absl::StatusOr<Dataset> LoadCsv(const std::string& path, const Schema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseCsv(buffer.str(), schema);
}

absl::StatusOr<EncodedDataset> OneHotEncode(const Dataset& dataset) {
  const Schema& schema = dataset.schema();
  for (const Attribute& attribute : schema.attributes()) {
    if (attribute.is_numeric() && !attribute.is_bucketed()) {
      return absl::FailedPreconditionError(absl::StrCat(
          "numeric attribute '", attribute.name, "' has no bucketing rule"));
    }
  }
  EncodedDataset encoded{schema, {}, {}};
  encoded.ids.reserve(dataset.num_rows());
  for (const Record& record : dataset.rows()) encoded.ids.push_back(record.id);
  encoded.columns.resize(schema.size());
  for (std::size_t a = 0; a < schema.size(); ++a) {
    const Attribute& attribute = schema.attribute(a);
    std::vector<OneHot>& column = encoded.columns[a];
    column.reserve(dataset.num_rows());
    for (const Record& record : dataset.rows()) {
      const std::optional<std::size_t> hot =
          EncodeValue(attribute, record.values[a]);
      if (!hot.has_value()) {
        return absl::InvalidArgumentError(absl::StrCat(
            "value '", record.values[a], "' of '", attribute.name,
            "' cannot be encoded"));
      }
      column.push_back(MakeOneHot(attribute.cardinality(), *hot));
    }
  }
  return encoded;
}

absl::StatusOr<Dataset> Decode(const EncodedDataset& encoded) {
  const Schema& schema = encoded.schema;
  if (encoded.columns.size() != schema.size()) {
    return absl::InvalidArgumentError("column count does not match schema");
  }
  std::vector<Record> rows(encoded.num_rows());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    rows[r].id = encoded.ids[r];
    rows[r].values.reserve(schema.size());
  }
  for (std::size_t a = 0; a < schema.size(); ++a) {
    const Attribute& attribute = schema.attribute(a);
    if (encoded.columns[a].size() != rows.size()) {
      return absl::InvalidArgumentError(
          absl::StrCat("column '", attribute.name, "' has wrong length"));
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const OneHot& bits = encoded.columns[a][r];
      if (bits.size() != attribute.cardinality()) {
        return absl::InvalidArgumentError(absl::StrCat(
            "illegal one-hot encoding at row ", r + 1, " attribute '",
            attribute.name, "': width ", bits.size(), ", expected ",
            attribute.cardinality()));
      }
      absl::StatusOr<std::size_t> hot = HotIndex(bits);
      if (!hot.ok()) {
        return absl::InvalidArgumentError(
            absl::StrCat(hot.status().message(), " at row ", r + 1,
                         " attribute '", attribute.name, "'"));
      }
      rows[r].values.push_back(attribute.domain[*hot]);
    }
  }
  return Dataset::Create(schema, std::move(rows));
}

std::vector<std::string> LargeDomainWarnings(const Schema& schema,
                                             std::size_t threshold) {
  std::vector<std::string> warnings;
  for (const Attribute& attribute : schema.attributes()) {
    if (attribute.cardinality() > threshold) {
      warnings.push_back(absl::StrCat(
          "attribute '", attribute.name, "' has ", attribute.cardinality(),
          " domain values; one-hot width exceeds ", threshold));
    }
  }
  return warnings;
}

}  // namespace buds
