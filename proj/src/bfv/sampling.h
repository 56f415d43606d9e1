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

// Distributions for keys and encryption noise.

#ifndef HHEML_SRC_BFV_SAMPLING_H_
#define HHEML_SRC_BFV_SAMPLING_H_

#include <cstdint>
#include <vector>

#include "hheml/bfv/rns.h"
#include "hheml/random.h"

namespace hheml::bfv {

// Centered binomial with this many coin pairs: sigma = sqrt(21 / 2) ~ 3.24.
inline constexpr int kErrorCoins = 21;

inline std::vector<int8_t> sample_ternary(Prng& rng, size_t n) {
  std::vector<int8_t> out(n);
  for (auto& v : out) v = int8_t(int(rng.uniform(3)) - 1);
  return out;
}

inline std::vector<int8_t> sample_error(Prng& rng, size_t n) {
  constexpr uint64_t kMask = (uint64_t{1} << kErrorCoins) - 1;
  std::vector<int8_t> out(n);
  for (auto& v : out) {
    const uint64_t r = rng.next_u64();
    v = int8_t(__builtin_popcountll(r & kMask) -
               __builtin_popcountll((r >> 32) & kMask));
  }
  return out;
}

// Writes the signed small polynomial into each prime of `base` (k x n).
inline void lift_small(const std::vector<int8_t>& small, const RnsBase& base,
                       size_t count, uint64_t* out) {
  const size_t n = small.size();
  for (size_t k = 0; k < count; ++k) {
    const Modulus& q = base[k];
    uint64_t* row = out + k * n;
    for (size_t i = 0; i < n; ++i) row[i] = q.from_signed(small[i]);
  }
}

inline void sample_uniform(Prng& rng, const RnsBase& base, size_t count,
                           size_t n, uint64_t* out) {
  for (size_t k = 0; k < count; ++k) {
    const uint64_t q = base[k].value();
    uint64_t* row = out + k * n;
    for (size_t i = 0; i < n; ++i) row[i] = rng.uniform(q);
  }
}

}  // namespace hheml::bfv

#endif  // HHEML_SRC_BFV_SAMPLING_H_
