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

// Little-endian multi-limb unsigned arithmetic for CRT composition and
// rescaling. Operands are raw limb arrays with explicit lengths; callers own
// the storage.

#ifndef HHEML_BFV_BIGINT_H_
#define HHEML_BFV_BIGINT_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hheml/bfv/modarith.h"

namespace hheml::bfv::mp {

// acc[0..n) += b[0..lb) * w. The carry propagates up to acc[n-1]; the
// caller guarantees no overflow past n limbs.
inline void addmul_word(uint64_t* acc, size_t n, const uint64_t* b, size_t lb,
                        uint64_t w) {
  uint64_t carry = 0;
  size_t i = 0;
  for (; i < lb; ++i) {
    u128 p = u128(b[i]) * w + acc[i] + carry;
    acc[i] = uint64_t(p);
    carry = uint64_t(p >> 64);
  }
  for (; carry && i < n; ++i) {
    u128 s = u128(acc[i]) + carry;
    acc[i] = uint64_t(s);
    carry = uint64_t(s >> 64);
  }
}

// Returns -1, 0, 1.
inline int compare(const uint64_t* a, const uint64_t* b, size_t n) {
  for (size_t i = n; i-- > 0;) {
    if (a[i] != b[i]) return a[i] < b[i] ? -1 : 1;
  }
  return 0;
}

// a -= b over n limbs; returns the borrow.
inline uint64_t sub(uint64_t* a, const uint64_t* b, size_t n) {
  uint64_t borrow = 0;
  for (size_t i = 0; i < n; ++i) {
    u128 d = u128(a[i]) - b[i] - borrow;
    a[i] = uint64_t(d);
    borrow = uint64_t(d >> 64) ? 1 : 0;
  }
  return borrow;
}

// out = a - b over n limbs (a >= b).
inline void sub_into(uint64_t* out, const uint64_t* a, const uint64_t* b,
                     size_t n) {
  uint64_t borrow = 0;
  for (size_t i = 0; i < n; ++i) {
    u128 d = u128(a[i]) - b[i] - borrow;
    out[i] = uint64_t(d);
    borrow = uint64_t(d >> 64) ? 1 : 0;
  }
}

// a += b over n limbs; returns the carry.
inline uint64_t add(uint64_t* a, const uint64_t* b, size_t n) {
  uint64_t carry = 0;
  for (size_t i = 0; i < n; ++i) {
    u128 s = u128(a[i]) + b[i] + carry;
    a[i] = uint64_t(s);
    carry = uint64_t(s >> 64);
  }
  return carry;
}

// a mod m, given r64 = 2^64 mod m.
inline uint64_t mod_word(const uint64_t* a, size_t n, const Modulus& m,
                         uint64_t r64) {
  uint64_t r = 0;
  for (size_t i = n; i-- > 0;) {
    r = m.reduce128(u128(r) * r64 + a[i]);
  }
  return r;
}

inline int bit_length(const uint64_t* a, size_t n) {
  for (size_t i = n; i-- > 0;) {
    if (a[i]) return int(64 * i) + 64 - __builtin_clzll(a[i]);
  }
  return 0;
}

}  // namespace hheml::bfv::mp

#endif  // HHEML_BFV_BIGINT_H_
