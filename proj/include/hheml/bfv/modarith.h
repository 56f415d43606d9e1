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

// Word-size modular arithmetic for the RNS primes.

#ifndef HHEML_BFV_MODARITH_H_
#define HHEML_BFV_MODARITH_H_

#include <cstdint>
#include <vector>

namespace hheml::bfv {

using u128 = unsigned __int128;

// A modulus below 2^61 with its Barrett constant floor(2^128 / value).
class Modulus {
 public:
  Modulus() = default;
  explicit Modulus(uint64_t value);

  uint64_t value() const { return value_; }
  int bit_count() const { return bits_; }

  // x mod value for x < 2^124.
  uint64_t reduce128(u128 x) const {
    const uint64_t hi = uint64_t(x >> 64);
    const uint64_t lo = uint64_t(x);
    const u128 mid = u128(hi) * ratio_lo_ + u128(lo) * ratio_hi_ +
                     ((u128(lo) * ratio_lo_) >> 64);
    const uint64_t qhat = hi * ratio_hi_ + uint64_t(mid >> 64);
    uint64_t r = lo - qhat * value_;
    while (r >= value_) r -= value_;
    return r;
  }
  uint64_t reduce(uint64_t x) const { return x >= value_ ? x % value_ : x; }
  uint64_t mul(uint64_t a, uint64_t b) const { return reduce128(u128(a) * b); }
  uint64_t add(uint64_t a, uint64_t b) const {
    uint64_t s = a + b;
    return s >= value_ ? s - value_ : s;
  }
  uint64_t sub(uint64_t a, uint64_t b) const {
    return a >= b ? a - b : a + value_ - b;
  }
  uint64_t neg(uint64_t a) const { return a == 0 ? 0 : value_ - a; }
  // Residue of a signed integer.
  uint64_t from_signed(int64_t v) const {
    if (v >= 0) return reduce(uint64_t(v));
    uint64_t r = reduce(uint64_t(-(v + 1)) + 1);
    return neg(r);
  }

  uint64_t pow(uint64_t base, uint64_t exp) const;
  // Throws std::invalid_argument when a is not invertible.
  uint64_t inv(uint64_t a) const;

  bool operator==(const Modulus& o) const { return value_ == o.value_; }

 private:
  uint64_t value_ = 0;
  uint64_t ratio_hi_ = 0;
  uint64_t ratio_lo_ = 0;
  int bits_ = 0;
};

// Multiplication by a fixed operand w with precomputed floor(w * 2^64 / q).
struct ShoupMul {
  uint64_t operand = 0;
  uint64_t quotient = 0;

  ShoupMul() = default;
  ShoupMul(uint64_t w, uint64_t q)
      : operand(w), quotient(uint64_t((u128(w) << 64) / q)) {}

  uint64_t mul(uint64_t x, uint64_t q) const {
    const uint64_t r = mul_lazy(x, q);
    return r >= q ? r - q : r;
  }
  // Result in [0, 2q) for any 64-bit x.
  uint64_t mul_lazy(uint64_t x, uint64_t q) const {
    const uint64_t hi = uint64_t((u128(x) * quotient) >> 64);
    return x * operand - hi * q;
  }
};

bool is_prime(uint64_t n);

// `count` distinct primes of exactly `bits` bits congruent to 1 mod
// `congruence`, in descending order, skipping anything in `exclude`.
std::vector<uint64_t> find_ntt_primes(int bits, uint64_t congruence,
                                      size_t count,
                                      const std::vector<uint64_t>& exclude = {});

}  // namespace hheml::bfv

#endif  // HHEML_BFV_MODARITH_H_
