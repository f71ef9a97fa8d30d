// Copyright 2026 The hetsl Authors
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hetsl {

enum class ErrorCode {
  kInvalidArgument,
  kZeroColumn,
  kNotStronglyConnected,
  kDegenerateBlock,
  kInvalidRegime,
  kNoConvergence,
  kSupportMismatch,
  kDeltaOutOfRange,
  kWindowTooLarge,
  kZeroInformativeness,
  kPreconditionFailed,
  kInsufficientSteps,
  kMismatchedConfig,
  kIo,
  kParse,
};

std::string_view error_code_name(ErrorCode code);

// All library failures are reported through this exception. The code is
// stable and machine-readable; the message carries the offending detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kZeroColumn: return "ZeroColumn";
    case ErrorCode::kNotStronglyConnected: return "NotStronglyConnected";
    case ErrorCode::kDegenerateBlock: return "DegenerateBlock";
    case ErrorCode::kInvalidRegime: return "InvalidRegime";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kSupportMismatch: return "SupportMismatch";
    case ErrorCode::kDeltaOutOfRange: return "DeltaOutOfRange";
    case ErrorCode::kWindowTooLarge: return "WindowTooLarge";
    case ErrorCode::kZeroInformativeness: return "ZeroInformativeness";
    case ErrorCode::kPreconditionFailed: return "PreconditionFailed";
    case ErrorCode::kInsufficientSteps: return "InsufficientSteps";
    case ErrorCode::kMismatchedConfig: return "MismatchedConfig";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kParse: return "Parse";
  }
  return "Unknown";
}

}  // namespace hetsl
