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

#include "buds/query.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/ascii.h"
#include "absl/strings/match.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "buds/status_macros.h"

namespace buds {
namespace {

struct Token {
  enum class Kind { kWord, kQuoted, kOperator };
  Kind kind;
  std::string text;
  std::size_t offset;  // start in the source text
  std::size_t end;
};

constexpr absl::string_view kLessEqualUtf8 = "\xE2\x89\xA4";
constexpr absl::string_view kGreaterEqualUtf8 = "\xE2\x89\xA5";

bool StartsOperator(absl::string_view rest) {
  return rest.front() == '<' || rest.front() == '>' || rest.front() == '=' ||
         absl::StartsWith(rest, kLessEqualUtf8) ||
         absl::StartsWith(rest, kGreaterEqualUtf8);
}

absl::StatusOr<std::vector<Token>> Tokenize(absl::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    if (absl::ascii_isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    const absl::string_view rest = text.substr(i);
    if (text[i] == '"') {
      std::string value;
      ++i;
      bool closed = false;
      while (i < text.size()) {
        if (text[i] == '"') {
          if (i + 1 < text.size() && text[i + 1] == '"') {
            value.push_back('"');
            i += 2;
            continue;
          }
          closed = true;
          ++i;
          break;
        }
        value.push_back(text[i++]);
      }
      if (!closed) {
        return absl::InvalidArgumentError(
            absl::StrCat("unterminated quote at offset ", start));
      }
      tokens.push_back({Token::Kind::kQuoted, std::move(value), start, i});
    } else if (StartsOperator(rest)) {
      std::string op;
      if (absl::StartsWith(rest, kLessEqualUtf8)) {
        op = "<=";
        i += kLessEqualUtf8.size();
      } else if (absl::StartsWith(rest, kGreaterEqualUtf8)) {
        op = ">=";
        i += kGreaterEqualUtf8.size();
      } else if (absl::StartsWith(rest, "<=") || absl::StartsWith(rest, ">=") ||
                 absl::StartsWith(rest, "==")) {
        op = std::string(rest.substr(0, 2));
        if (op == "==") op = "=";
        i += 2;
      } else {
        op = std::string(rest.substr(0, 1));
        i += 1;
      }
      tokens.push_back({Token::Kind::kOperator, std::move(op), start, i});
    } else {
      while (i < text.size() &&
             !absl::ascii_isspace(static_cast<unsigned char>(text[i])) &&
             text[i] != '"' && !StartsOperator(text.substr(i))) {
        ++i;
      }
      tokens.push_back(
          {Token::Kind::kWord, std::string(text.substr(start, i - start)),
           start, i});
    }
  }
  return tokens;
}

bool IsKeyword(const Token& token, absl::string_view keyword) {
  return token.kind == Token::Kind::kWord &&
         absl::EqualsIgnoreCase(token.text, keyword);
}

std::optional<Comparison> ParseComparison(absl::string_view op) {
  if (op == "=") return Comparison::kEq;
  if (op == "<") return Comparison::kLt;
  if (op == ">") return Comparison::kGt;
  if (op == "<=") return Comparison::kLe;
  if (op == ">=") return Comparison::kGe;
  return std::nullopt;
}

std::string Unquote(absl::string_view text) {
  text = absl::StripAsciiWhitespace(text);
  if (text.size() >= 2 && text.front() == '"' && text.back() == '"') {
    text = text.substr(1, text.size() - 2);
  }
  return std::string(text);
}

std::string QuoteIfNeeded(const std::string& value) {
  const bool plain =
      !value.empty() &&
      std::none_of(value.begin(), value.end(), [](unsigned char c) {
        return absl::ascii_isspace(c) || c == '"' || c == '<' || c == '>' ||
               c == '=';
      });
  if (plain) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::optional<double> ParseNumber(absl::string_view text) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() ||
      !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

// Position of a query literal in the attribute's ordered domain: bucket of a
// number for bucketed numerics, otherwise the matching label.
absl::StatusOr<std::size_t> ResolveValue(const Attribute& attribute,
                                         const std::string& value) {
  if (attribute.is_numeric() && !attribute.is_bucketed()) {
    return absl::FailedPreconditionError(absl::StrCat(
        "numeric attribute '", attribute.name, "' has no bucketing rule"));
  }
  if (std::optional<std::size_t> index = attribute.IndexOfLabel(value)) {
    return *index;
  }
  if (attribute.is_bucketed()) {
    if (std::optional<double> number = ParseNumber(value)) {
      return attribute.BucketOf(*number);
    }
  }
  return absl::InvalidArgumentError(absl::StrCat(
      "value '", value, "' is not in the domain of '", attribute.name, "'"));
}

bool Compare(std::size_t lhs, Comparison op, std::size_t rhs) {
  switch (op) {
    case Comparison::kEq:
      return lhs == rhs;
    case Comparison::kLt:
      return lhs < rhs;
    case Comparison::kGt:
      return lhs > rhs;
    case Comparison::kLe:
      return lhs <= rhs;
    case Comparison::kGe:
      return lhs >= rhs;
  }
  return false;
}

absl::StatusOr<std::size_t> ResolveAttribute(const Schema& schema,
                                             absl::string_view name) {
  std::optional<std::size_t> index = schema.IndexOf(name);
  if (!index.has_value()) {
    return absl::NotFoundError(
        absl::StrCat("query references unknown attribute '", name, "'"));
  }
  return *index;
}

absl::StatusOr<std::size_t> ResolveTimeAttribute(const Schema& schema,
                                                 const TimeHorizon& horizon) {
  if (!horizon.attribute.empty()) {
    return ResolveAttribute(schema, horizon.attribute);
  }
  if (!schema.time_attribute().has_value()) {
    return absl::InvalidArgumentError(
        "query has a 'during' range but the schema declares no time "
        "attribute");
  }
  return ResolveAttribute(schema, *schema.time_attribute());
}

}  // namespace

absl::string_view ComparisonSymbol(Comparison op) {
  switch (op) {
    case Comparison::kEq:
      return "=";
    case Comparison::kLt:
      return "<";
    case Comparison::kGt:
      return ">";
    case Comparison::kLe:
      return "<=";
    case Comparison::kGe:
      return ">=";
  }
  return "?";
}

std::string QuerySpec::ToString() const {
  std::string out = "count";
  if (!predicates.empty()) {
    absl::StrAppend(&out, " where ");
    std::vector<std::string> parts;
    for (const Predicate& p : predicates) {
      parts.push_back(absl::StrCat(QuoteIfNeeded(p.attribute), " ",
                                   ComparisonSymbol(p.op), " ",
                                   QuoteIfNeeded(p.value)));
    }
    absl::StrAppend(&out, absl::StrJoin(parts, " and "));
  }
  if (time_horizon.has_value()) {
    absl::StrAppend(&out, " during ", QuoteIfNeeded(time_horizon->first), "..",
                    QuoteIfNeeded(time_horizon->last));
  }
  return out;
}

absl::StatusOr<QuerySpec> ParseQuery(absl::string_view text) {
  BUDS_ASSIGN_OR_RETURN(std::vector<Token> tokens, Tokenize(text));
  if (tokens.empty() || !IsKeyword(tokens[0], "count")) {
    return absl::InvalidArgumentError("query must start with 'count'");
  }
  QuerySpec query;
  std::size_t pos = 1;
  if (pos < tokens.size() && IsKeyword(tokens[pos], "where")) {
    ++pos;
    while (true) {
      if (pos + 2 >= tokens.size()) {
        return absl::InvalidArgumentError(
            "incomplete predicate; expected '<attribute> <op> <value>'");
      }
      const Token& attribute = tokens[pos];
      const Token& op = tokens[pos + 1];
      const Token& value = tokens[pos + 2];
      if (attribute.kind == Token::Kind::kOperator ||
          op.kind != Token::Kind::kOperator ||
          value.kind == Token::Kind::kOperator) {
        return absl::InvalidArgumentError(absl::StrCat(
            "malformed predicate at offset ", attribute.offset));
      }
      std::optional<Comparison> comparison = ParseComparison(op.text);
      if (!comparison.has_value()) {
        return absl::InvalidArgumentError(
            absl::StrCat("unknown operator '", op.text, "'"));
      }
      query.predicates.push_back({attribute.text, *comparison, value.text});
      pos += 3;
      if (pos < tokens.size() && IsKeyword(tokens[pos], "and")) {
        ++pos;
        continue;
      }
      break;
    }
  }
  if (pos < tokens.size() && IsKeyword(tokens[pos], "during")) {
    const absl::string_view range = text.substr(tokens[pos].end);
    const std::size_t dots = range.find("..");
    if (dots == absl::string_view::npos) {
      return absl::InvalidArgumentError("'during' expects '<t1>..<t2>'");
    }
    TimeHorizon horizon;
    horizon.first = Unquote(range.substr(0, dots));
    horizon.last = Unquote(range.substr(dots + 2));
    if (horizon.first.empty() || horizon.last.empty()) {
      return absl::InvalidArgumentError("'during' range has an empty bound");
    }
    query.time_horizon = std::move(horizon);
    pos = tokens.size();
  }
  if (pos != tokens.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "unexpected token '", tokens[pos].text, "' at offset ",
        tokens[pos].offset));
  }
  if (query.predicates.empty() && !query.time_horizon.has_value()) {
    return absl::InvalidArgumentError(
        "query needs a 'where' clause or a 'during' range");
  }
  return query;
}

bool CompiledQuery::Matches(const std::vector<std::size_t>& hot_indices) const {
  for (const Clause& clause : clauses) {
    if (!clause.accepts[hot_indices[clause.attribute]]) return false;
  }
  return true;
}

absl::StatusOr<CompiledQuery> CompileQuery(const QuerySpec& query,
                                           const Schema& schema) {
  CompiledQuery compiled;
  const std::optional<std::string>& time_attribute = schema.time_attribute();
  for (const Predicate& predicate : query.predicates) {
    BUDS_ASSIGN_OR_RETURN(std::size_t index,
                          ResolveAttribute(schema, predicate.attribute));
    const Attribute& attribute = schema.attribute(index);
    const bool ordered = attribute.is_numeric() ||
                         (time_attribute.has_value() &&
                          *time_attribute == attribute.name);
    if (!ordered && predicate.op != Comparison::kEq) {
      return absl::InvalidArgumentError(absl::StrCat(
          "categorical attribute '", attribute.name, "' only supports '='"));
    }
    BUDS_ASSIGN_OR_RETURN(std::size_t target,
                          ResolveValue(attribute, predicate.value));
    CompiledQuery::Clause clause{index,
                                 std::vector<bool>(attribute.cardinality())};
    for (std::size_t v = 0; v < attribute.cardinality(); ++v) {
      clause.accepts[v] = Compare(v, predicate.op, target);
    }
    compiled.clauses.push_back(std::move(clause));
  }
  if (query.time_horizon.has_value()) {
    BUDS_ASSIGN_OR_RETURN(std::size_t index,
                          ResolveTimeAttribute(schema, *query.time_horizon));
    const Attribute& attribute = schema.attribute(index);
    BUDS_ASSIGN_OR_RETURN(std::size_t first,
                          ResolveValue(attribute, query.time_horizon->first));
    BUDS_ASSIGN_OR_RETURN(std::size_t last,
                          ResolveValue(attribute, query.time_horizon->last));
    CompiledQuery::Clause clause{index,
                                 std::vector<bool>(attribute.cardinality())};
    for (std::size_t v = 0; v < attribute.cardinality(); ++v) {
      clause.accepts[v] = first <= v && v <= last;
    }
    compiled.clauses.push_back(std::move(clause));
  }
  return compiled;
}

absl::StatusOr<std::vector<std::string>> RelevantAttributes(
    const QuerySpec& query, const Schema& schema) {
  std::vector<bool> referenced(schema.size(), false);
  for (const Predicate& predicate : query.predicates) {
    BUDS_ASSIGN_OR_RETURN(std::size_t index,
                          ResolveAttribute(schema, predicate.attribute));
    referenced[index] = true;
  }
  if (query.time_horizon.has_value()) {
    BUDS_ASSIGN_OR_RETURN(std::size_t index,
                          ResolveTimeAttribute(schema, *query.time_horizon));
    referenced[index] = true;
  }
  std::vector<std::string> names;
  for (std::size_t a = 0; a < schema.size(); ++a) {
    if (referenced[a]) names.push_back(schema.attribute(a).name);
  }
  if (names.empty()) {
    return absl::InvalidArgumentError("query references no attribute");
  }
  return names;
}

std::vector<std::string> TiedDataset::ChannelNames() const {
  std::vector<std::string> names;
  names.reserve(channels.size());
  for (const Channel& channel : channels) names.push_back(channel.name);
  return names;
}

absl::StatusOr<TiedDataset> TieAttributes(
    EncodedDataset encoded, const std::vector<std::string>& relevant) {
  if (relevant.empty()) {
    return absl::InvalidArgumentError("cannot tie an empty attribute set");
  }
  const Schema& schema = encoded.schema;
  std::vector<bool> tied(schema.size(), false);
  for (const std::string& name : relevant) {
    BUDS_ASSIGN_OR_RETURN(std::size_t index, ResolveAttribute(schema, name));
    if (tied[index]) {
      return absl::InvalidArgumentError(
          absl::StrCat("attribute '", name, "' listed twice"));
    }
    tied[index] = true;
  }

  TiedDataset result;
  Channel composite;
  bool composite_placed = false;
  for (std::size_t a = 0; a < schema.size(); ++a) {
    if (tied[a]) {
      composite.attributes.push_back(a);
      result.tied_group.push_back(schema.attribute(a).name);
      if (!composite_placed) {
        result.tied_channel = result.channels.size();
        result.channels.push_back({});
        composite_placed = true;
      }
    } else {
      result.free_attributes.push_back(schema.attribute(a).name);
      result.channels.push_back({schema.attribute(a).name, {a}});
    }
  }
  composite.name = absl::StrJoin(result.tied_group, ":");
  result.channels[result.tied_channel] = std::move(composite);
  result.base = std::move(encoded);
  return result;
}

}  // namespace buds
