// Copyright 2026 The protocalib Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace protocalib {

enum class ErrorCode {
  kInvalidArgument,
  kZeroVector,
  kDimensionMismatch,
  kNotUnitNorm,
  kEmptyPrototypeList,
  kUnknownLabel,
  kDuplicateLabel,
  kEmptyScores,
  kPendingOptimum,
  kRejectionExhausted,
  kUnknownDatasetName,
  kBadMagic,
  kTruncatedFile,
  kNormViolation,
  kIoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNotUnitNorm: return "NotUnitNorm";
    case ErrorCode::kEmptyPrototypeList: return "EmptyPrototypeList";
    case ErrorCode::kUnknownLabel: return "UnknownLabel";
    case ErrorCode::kDuplicateLabel: return "DuplicateLabel";
    case ErrorCode::kEmptyScores: return "EmptyScores";
    case ErrorCode::kPendingOptimum: return "PendingOptimum";
    case ErrorCode::kRejectionExhausted: return "RejectionExhausted";
    case ErrorCode::kUnknownDatasetName: return "UnknownDatasetName";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kNormViolation: return "NormViolation";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

// All library failures are reported through this exception; `code()` lets
// callers (the CLI in particular) map failures onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

namespace detail {

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const char* message) {
  if (!condition) fail(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

inline void require_same_dim(std::size_t a, std::size_t b, const std::string& what) {
  if (a != b) {
    fail(ErrorCode::kDimensionMismatch,
         what + " (" + std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

inline void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) require_same_dim(a, b, std::string(what));
}

}  // namespace detail
}  // namespace protocalib
