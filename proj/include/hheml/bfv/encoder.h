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

// Batching: a vector of N values mod 65537 packed into one plaintext so that
// ring operations act slotwise. Slots form two rows of N/2; rotations act on
// each row cyclically.

#ifndef HHEML_BFV_ENCODER_H_
#define HHEML_BFV_ENCODER_H_

#include <cstdint>
#include <span>

#include "hheml/bfv/context.h"
#include "hheml/bfv/types.h"
#include "hheml/field.h"

namespace hheml::bfv {

class BatchEncoder {
 public:
  explicit BatchEncoder(ContextPtr ctx) : ctx_(std::move(ctx)) {}

  size_t slot_count() const { return ctx_->slot_count(); }

  // Values land in the first |v| slots, zero elsewhere. Throws kTooManySlots.
  Plaintext encode(const FieldVector& v) const;
  Plaintext encode(std::span<const uint64_t> slots) const;
  // All N slots.
  FieldVector decode(const Plaintext& p) const;

 private:
  ContextPtr ctx_;
};

}  // namespace hheml::bfv

#endif  // HHEML_BFV_ENCODER_H_
