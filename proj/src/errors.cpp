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

#include "hheml/errors.h"

namespace hheml {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kRngFailure: return "RngFailure";
    case ErrorCode::kNonceReuse: return "NonceReuse";
    case ErrorCode::kConfigMismatch: return "ConfigMismatch";
    case ErrorCode::kUnsupportedParams: return "UnsupportedParams";
    case ErrorCode::kSlotOverflow: return "SlotOverflow";
    case ErrorCode::kTooManySlots: return "TooManySlots";
    case ErrorCode::kNoiseOverflow: return "NoiseOverflow";
    case ErrorCode::kParamMismatch: return "ParamMismatch";
    case ErrorCode::kMissingEvalKey: return "MissingEvalKey";
    case ErrorCode::kLayoutMismatch: return "LayoutMismatch";
    case ErrorCode::kSignatureInvalid: return "SignatureInvalid";
    case ErrorCode::kStaleMessage: return "StaleMessage";
    case ErrorCode::kMalformed: return "Malformed";
    case ErrorCode::kDecryptFailure: return "DecryptFailure";
    case ErrorCode::kRangeViolation: return "RangeViolation";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kProtocolAbort: return "ProtocolAbort";
    case ErrorCode::kUsage: return "Usage";
  }
  return "Unknown";
}

}  // namespace hheml
