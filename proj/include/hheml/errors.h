/*
 * Copyright 2026 The hheml Authors.
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

#ifndef HHEML_ERRORS_H_
#define HHEML_ERRORS_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace hheml {

// Every failure the library reports carries one of these codes so callers
// (and the protocol engine) can map them to a distinguishable abort.
enum class ErrorCode {
  kLengthMismatch,
  kRngFailure,
  kNonceReuse,
  kConfigMismatch,
  kUnsupportedParams,
  kSlotOverflow,
  kTooManySlots,
  kNoiseOverflow,
  kParamMismatch,
  kMissingEvalKey,
  kLayoutMismatch,
  kSignatureInvalid,
  kStaleMessage,
  kMalformed,
  kDecryptFailure,
  kRangeViolation,
  kParseError,
  kIoError,
  kTimeout,
  kProtocolAbort,
  kUsage,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace hheml

#endif  // HHEML_ERRORS_H_
