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

#include "hheml/bfv/ntt.h"

#include <stdexcept>

namespace hheml::bfv {

uint64_t find_primitive_root(size_t two_n, const Modulus& q) {
  const uint64_t qv = q.value();
  if ((qv - 1) % two_n != 0) {
    throw std::invalid_argument("modulus is not 1 mod 2N");
  }
  const uint64_t cofactor = (qv - 1) / two_n;
  uint64_t best = 0;
  // A candidate g^cofactor is a primitive 2N-th root iff its N-th power is
  // -1. Among the roots found, the smallest is taken for determinism.
  for (uint64_t g = 2; g < qv; ++g) {
    uint64_t root = q.pow(g, cofactor);
    if (q.pow(root, two_n / 2) == qv - 1) {
      // Every primitive root is root^k for odd k; scan them.
      uint64_t cur = root;
      const uint64_t sq = q.mul(root, root);
      best = root;
      for (size_t k = 1; k < two_n; k += 2) {
        if (cur < best) best = cur;
        cur = q.mul(cur, sq);
      }
      return best;
    }
  }
  throw std::invalid_argument("no primitive root found");
}

NttTables::NttTables(size_t n, const Modulus& modulus)
    : n_(n), modulus_(modulus) {
  if (n < 2 || (n & (n - 1)) != 0) {
    throw std::invalid_argument("NTT size must be a power of two");
  }
  log_n_ = __builtin_ctzll(n);
  psi_ = find_primitive_root(2 * n, modulus_);
  const uint64_t q = modulus_.value();
  const uint64_t psi_inv = modulus_.inv(psi_);
  psi_rev_.resize(n);
  inv_psi_rev_.resize(n);
  uint64_t pw = 1, ipw = 1;
  std::vector<uint64_t> powers(n), inv_powers(n);
  for (size_t i = 0; i < n; ++i) {
    powers[i] = pw;
    inv_powers[i] = ipw;
    pw = modulus_.mul(pw, psi_);
    ipw = modulus_.mul(ipw, psi_inv);
  }
  for (size_t i = 0; i < n; ++i) {
    const uint32_t r = reverse_bits(uint32_t(i), log_n_);
    psi_rev_[i] = ShoupMul(powers[r], q);
    inv_psi_rev_[i] = ShoupMul(inv_powers[r], q);
  }
  n_inv_ = ShoupMul(modulus_.inv(n % q), q);
}

// Both transforms keep intermediate values in [0, 4q) (forward) or [0, 2q)
// (inverse) and reduce once at the end; moduli stay below 2^62.
void NttTables::forward(std::span<uint64_t> a) const {
  const uint64_t q = modulus_.value();
  const uint64_t two_q = 2 * q;
  size_t t = n_;
  for (size_t m = 1; m < n_; m <<= 1) {
    t >>= 1;
    for (size_t i = 0; i < m; ++i) {
      const size_t j1 = 2 * i * t;
      const ShoupMul& w = psi_rev_[m + i];
      uint64_t* x = a.data() + j1;
      uint64_t* y = x + t;
      for (size_t j = 0; j < t; ++j) {
        uint64_t u = x[j];
        if (u >= two_q) u -= two_q;
        const uint64_t v = w.mul_lazy(y[j], q);
        x[j] = u + v;
        y[j] = u + two_q - v;
      }
    }
  }
  for (auto& x : a) {
    if (x >= two_q) x -= two_q;
    if (x >= q) x -= q;
  }
}

void NttTables::inverse(std::span<uint64_t> a) const {
  const uint64_t q = modulus_.value();
  const uint64_t two_q = 2 * q;
  size_t t = 1;
  for (size_t m = n_; m > 1; m >>= 1) {
    const size_t h = m >> 1;
    size_t j1 = 0;
    for (size_t i = 0; i < h; ++i) {
      const ShoupMul& w = inv_psi_rev_[h + i];
      uint64_t* x = a.data() + j1;
      uint64_t* y = x + t;
      for (size_t j = 0; j < t; ++j) {
        const uint64_t u = x[j];
        const uint64_t v = y[j];
        uint64_t s = u + v;
        x[j] = s >= two_q ? s - two_q : s;
        y[j] = w.mul_lazy(u + two_q - v, q);
      }
      j1 += 2 * t;
    }
    t <<= 1;
  }
  for (auto& x : a) x = n_inv_.mul(x, q);
}

}  // namespace hheml::bfv
