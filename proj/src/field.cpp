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

#include "hheml/field.h"

#include <string>

#include "hheml/errors.h"

namespace hheml {

FieldVector::FieldVector(std::initializer_list<int64_t> values) {
  elems_.reserve(values.size());
  for (int64_t v : values) elems_.push_back(reduce(v));
}

FieldVector FieldVector::from_signed(std::span<const int64_t> values) {
  FieldVector out(values.size());
  for (size_t i = 0; i < values.size(); ++i) out.elems_[i] = reduce(values[i]);
  return out;
}

FieldVector FieldVector::from_canonical(std::vector<FieldElem> values) {
  for (size_t i = 0; i < values.size(); ++i) {
    if (values[i] >= kFieldModulus) {
      fail(ErrorCode::kRangeViolation,
           "element " + std::to_string(i) + " is not below p");
    }
  }
  FieldVector out;
  out.elems_ = std::move(values);
  return out;
}

std::vector<int64_t> FieldVector::lifted() const {
  std::vector<int64_t> out(elems_.size());
  for (size_t i = 0; i < elems_.size(); ++i) out[i] = centered_lift(elems_[i]);
  return out;
}

namespace {

void check_lengths(const FieldVector& a, const FieldVector& b) {
  if (a.size() != b.size()) {
    fail(ErrorCode::kLengthMismatch, std::to_string(a.size()) + " vs " +
                                         std::to_string(b.size()));
  }
}

}  // namespace

FieldVector vec_op(const FieldVector& a, const FieldVector& b, VecOp kind) {
  check_lengths(a, b);
  std::vector<FieldElem> out(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    switch (kind) {
      case VecOp::kAdd:
        out[i] = field_add(a[i], b[i]);
        break;
      case VecOp::kSub:
        out[i] = field_sub(a[i], b[i]);
        break;
      case VecOp::kMul:
        out[i] = field_mul(a[i], b[i]);
        break;
    }
  }
  return FieldVector::from_canonical(std::move(out));
}

FieldElem dot(const FieldVector& a, const FieldVector& b) {
  check_lengths(a, b);
  // Each product is < 2^32; accumulate in 64 bits and reduce periodically.
  uint64_t acc = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    acc += static_cast<uint64_t>(a[i]) * b[i];
    if ((i & 0xff) == 0xff) acc %= kFieldModulus;
  }
  return static_cast<FieldElem>(acc % kFieldModulus);
}

}  // namespace hheml
