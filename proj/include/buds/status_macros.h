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

#ifndef BUDS_STATUS_MACROS_H_
#define BUDS_STATUS_MACROS_H_

#include <utility>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

#define BUDS_RETURN_IF_ERROR(expr)              \
  do {                                          \
    const absl::Status _buds_status = (expr);   \
    if (!_buds_status.ok()) return _buds_status; \
  } while (0)

#define BUDS_STATUS_CONCAT_INNER_(x, y) x##y
#define BUDS_STATUS_CONCAT_(x, y) BUDS_STATUS_CONCAT_INNER_(x, y)

#define BUDS_ASSIGN_OR_RETURN_IMPL_(statusor, lhs, rexpr) \
  auto statusor = (rexpr);                                \
  if (!statusor.ok()) return statusor.status();           \
  lhs = std::move(statusor).value()

// Evaluates an absl::StatusOr<T> expression, returning its status on error
// and otherwise assigning the value to `lhs`.
#define BUDS_ASSIGN_OR_RETURN(lhs, rexpr) \
  BUDS_ASSIGN_OR_RETURN_IMPL_(            \
      BUDS_STATUS_CONCAT_(_buds_statusor_, __LINE__), lhs, rexpr)

#endif  // BUDS_STATUS_MACROS_H_
