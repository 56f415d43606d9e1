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

#include "hheml/bfv/encoder.h"

#include <string>

#include "hheml/errors.h"

namespace hheml::bfv {

Plaintext BatchEncoder::encode(const FieldVector& v) const {
  std::vector<uint64_t> slots(v.elems().begin(), v.elems().end());
  return encode(slots);
}

Plaintext BatchEncoder::encode(std::span<const uint64_t> slots) const {
  const size_t n = ctx_->n();
  if (slots.size() > n) {
    fail(ErrorCode::kTooManySlots, std::to_string(slots.size()) +
                                       " values for " + std::to_string(n) +
                                       " slots");
  }
  const uint64_t t = ctx_->plain_modulus().value();
  Plaintext p;
  p.coeffs.assign(n, 0);
  for (size_t s = 0; s < slots.size(); ++s) {
    if (slots[s] >= t) {
      fail(ErrorCode::kSlotOverflow, "slot value is not below t");
    }
    p.coeffs[ctx_->slot_index(s)] = slots[s];
  }
  ctx_->plain_ntt().inverse(p.coeffs);
  return p;
}

FieldVector BatchEncoder::decode(const Plaintext& p) const {
  const size_t n = ctx_->n();
  if (p.coeffs.size() != n) {
    fail(ErrorCode::kLengthMismatch, "plaintext has wrong degree");
  }
  std::vector<uint64_t> values = p.coeffs;
  ctx_->plain_ntt().forward(values);
  std::vector<FieldElem> out(n);
  for (size_t s = 0; s < n; ++s) out[s] = FieldElem(values[ctx_->slot_index(s)]);
  return FieldVector::from_canonical(std::move(out));
}

}  // namespace hheml::bfv
