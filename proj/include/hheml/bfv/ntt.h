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

// Negacyclic number-theoretic transform over Z_q[X]/(X^N + 1).
//
// After forward() position i holds a(psi^(2*bitrev(i) + 1)), psi a primitive
// 2N-th root of unity mod q.

#ifndef HHEML_BFV_NTT_H_
#define HHEML_BFV_NTT_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hheml/bfv/modarith.h"

namespace hheml::bfv {

class NttTables {
 public:
  NttTables(size_t n, const Modulus& modulus);

  size_t n() const { return n_; }
  const Modulus& modulus() const { return modulus_; }
  uint64_t root() const { return psi_; }

  void forward(std::span<uint64_t> a) const;
  void inverse(std::span<uint64_t> a) const;

 private:
  size_t n_;
  int log_n_;
  Modulus modulus_;
  uint64_t psi_;
  std::vector<ShoupMul> psi_rev_;
  std::vector<ShoupMul> inv_psi_rev_;
  ShoupMul n_inv_;
};

inline uint32_t reverse_bits(uint32_t x, int bits) {
  uint32_t r = 0;
  for (int i = 0; i < bits; ++i) {
    r = (r << 1) | (x & 1);
    x >>= 1;
  }
  return r;
}

// Smallest-valued primitive 2n-th root of unity mod q.
uint64_t find_primitive_root(size_t two_n, const Modulus& q);

}  // namespace hheml::bfv

#endif  // HHEML_BFV_NTT_H_
