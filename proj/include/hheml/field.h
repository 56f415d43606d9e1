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

// Arithmetic over the plaintext field Z_p, p = 2^16 + 1.
//
// Field elements are stored unsigned in [0, p). Signed values only appear at
// the boundary through reduce() and centered_lift().

#ifndef HHEML_FIELD_H_
#define HHEML_FIELD_H_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace hheml {

inline constexpr uint32_t kFieldModulus = 65537;

// Largest value returned by centered_lift(); the representative of 2^15 is
// positive.
inline constexpr int32_t kCenteredMax = 32768;
inline constexpr int32_t kCenteredMin = -32768;

// Range a linear-model output must stay inside to be recovered without
// wraparound.
inline constexpr int64_t kSafeResultMin = -32767;
inline constexpr int64_t kSafeResultMax = 32768;

using FieldElem = uint32_t;

constexpr FieldElem reduce(int64_t n) {
  int64_t r = n % static_cast<int64_t>(kFieldModulus);
  if (r < 0) r += kFieldModulus;
  return static_cast<FieldElem>(r);
}

constexpr int32_t centered_lift(FieldElem e) {
  return e <= static_cast<FieldElem>(kCenteredMax)
             ? static_cast<int32_t>(e)
             : static_cast<int32_t>(e) - static_cast<int32_t>(kFieldModulus);
}

constexpr FieldElem field_add(FieldElem a, FieldElem b) {
  uint32_t s = a + b;
  return s >= kFieldModulus ? s - kFieldModulus : s;
}

constexpr FieldElem field_sub(FieldElem a, FieldElem b) {
  return a >= b ? a - b : a + kFieldModulus - b;
}

constexpr FieldElem field_mul(FieldElem a, FieldElem b) {
  return static_cast<FieldElem>((static_cast<uint64_t>(a) * b) %
                                kFieldModulus);
}

constexpr FieldElem field_neg(FieldElem a) {
  return a == 0 ? 0 : kFieldModulus - a;
}

// Vector over Z_p. Every element is kept strictly below p.
class FieldVector {
 public:
  FieldVector() = default;
  explicit FieldVector(size_t len) : elems_(len, 0) {}
  FieldVector(std::initializer_list<int64_t> values);

  // Reduces every value mod p.
  static FieldVector from_signed(std::span<const int64_t> values);
  // Throws kRangeViolation if any value is >= p.
  static FieldVector from_canonical(std::vector<FieldElem> values);

  size_t size() const { return elems_.size(); }
  bool empty() const { return elems_.empty(); }

  FieldElem operator[](size_t i) const { return elems_[i]; }
  void set(size_t i, int64_t value) { elems_[i] = reduce(value); }

  std::span<const FieldElem> elems() const { return elems_; }
  std::vector<int64_t> lifted() const;

  bool operator==(const FieldVector&) const = default;

 private:
  std::vector<FieldElem> elems_;
};

enum class VecOp { kAdd, kSub, kMul };

// Elementwise op; throws kLengthMismatch on unequal lengths.
FieldVector vec_op(const FieldVector& a, const FieldVector& b, VecOp kind);
FieldElem dot(const FieldVector& a, const FieldVector& b);

}  // namespace hheml

#endif  // HHEML_FIELD_H_
