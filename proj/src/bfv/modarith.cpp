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

#include "hheml/bfv/modarith.h"

#include <algorithm>
#include <stdexcept>

namespace hheml::bfv {

Modulus::Modulus(uint64_t value) : value_(value) {
  if (value < 2 || value >= (uint64_t{1} << 61)) {
    throw std::invalid_argument("modulus out of range");
  }
  // floor(2^128 / value) computed as floor((2^128 - 1) / value), which is
  // equal unless value is a power of two.
  const u128 all_ones = ~u128(0);
  u128 ratio = all_ones / value;
  if ((value & (value - 1)) == 0) ratio += 1;
  ratio_hi_ = uint64_t(ratio >> 64);
  ratio_lo_ = uint64_t(ratio);
  bits_ = 64 - __builtin_clzll(value);
}

uint64_t Modulus::pow(uint64_t base, uint64_t exp) const {
  uint64_t result = 1 % value_;
  base = reduce(base);
  while (exp) {
    if (exp & 1) result = mul(result, base);
    base = mul(base, base);
    exp >>= 1;
  }
  return result;
}

uint64_t Modulus::inv(uint64_t a) const {
  // Extended Euclid over signed 128-bit.
  __int128 t = 0, new_t = 1;
  __int128 r = value_, new_r = reduce(a);
  while (new_r != 0) {
    __int128 q = r / new_r;
    __int128 tmp = t - q * new_t;
    t = new_t;
    new_t = tmp;
    tmp = r - q * new_r;
    r = new_r;
    new_r = tmp;
  }
  if (r != 1) throw std::invalid_argument("value not invertible");
  if (t < 0) t += value_;
  return uint64_t(t);
}

namespace {

uint64_t mulmod_slow(uint64_t a, uint64_t b, uint64_t m) {
  return uint64_t((u128(a) * b) % m);
}

uint64_t powmod_slow(uint64_t b, uint64_t e, uint64_t m) {
  uint64_t r = 1 % m;
  b %= m;
  while (e) {
    if (e & 1) r = mulmod_slow(r, b, m);
    b = mulmod_slow(b, b, m);
    e >>= 1;
  }
  return r;
}

}  // namespace

bool is_prime(uint64_t n) {
  if (n < 2) return false;
  for (uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull,
                     29ull, 31ull, 37ull}) {
    if (n % p == 0) return n == p;
  }
  uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  // These bases are deterministic for all 64-bit n.
  for (uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull,
                     29ull, 31ull, 37ull}) {
    uint64_t x = powmod_slow(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int i = 1; i < s; ++i) {
      x = mulmod_slow(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

std::vector<uint64_t> find_ntt_primes(int bits, uint64_t congruence,
                                      size_t count,
                                      const std::vector<uint64_t>& exclude) {
  if (bits < 2 || bits > 61) throw std::invalid_argument("bad prime size");
  std::vector<uint64_t> out;
  const uint64_t upper = uint64_t{1} << bits;
  const uint64_t lower = uint64_t{1} << (bits - 1);
  // Largest candidate below 2^bits that is 1 mod congruence.
  uint64_t candidate = upper - congruence + 1;
  while (out.size() < count) {
    if (candidate < lower) throw std::invalid_argument("not enough primes");
    if (is_prime(candidate) &&
        std::find(exclude.begin(), exclude.end(), candidate) == exclude.end()) {
      out.push_back(candidate);
    }
    candidate -= congruence;
  }
  return out;
}

}  // namespace hheml::bfv
