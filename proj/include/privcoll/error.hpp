/*
 * Copyright 2026 The privcoll Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PRIVCOLL_ERROR_HPP_
#define PRIVCOLL_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace privcoll {

enum class ErrorCode {
  kRangeOverflow,
  kShapeMismatch,
  kParamsMismatch,
  kInvalidPartyCount,
  kMissingShare,
  kNonFiniteLoss,
  kPartyTimeout,
  kTimeout,
  kDisconnected,
  kMalformedFrame,
  kBadMagic,
  kTruncatedFile,
  kInvalidPlan,
  kInvalidAdversarySet,
  kLengthMismatch,
  kConfig,
  kIo,
  kProtocol,
};

inline std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kRangeOverflow: return "RangeOverflow";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kParamsMismatch: return "ParamsMismatch";
    case ErrorCode::kInvalidPartyCount: return "InvalidPartyCount";
    case ErrorCode::kMissingShare: return "MissingShare";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kPartyTimeout: return "PartyTimeout";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kDisconnected: return "Disconnected";
    case ErrorCode::kMalformedFrame: return "MalformedFrame";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kInvalidPlan: return "InvalidPlan";
    case ErrorCode::kInvalidAdversarySet: return "InvalidAdversarySet";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kProtocol: return "ProtocolError";
  }
  return "Unknown";
}

// Every failure in the library surfaces as an Error carrying a code, so
// callers (tests, the CLI exit-code mapping) can branch on the kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace privcoll

#endif  // PRIVCOLL_ERROR_HPP_
