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

// Residue number system bases and exact conversions to and from multi-limb
// integers.

#ifndef HHEML_BFV_RNS_H_
#define HHEML_BFV_RNS_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hheml/bfv/modarith.h"

namespace hheml::bfv {

// Upper bound on limbs handled by the stack buffers in this module.
inline constexpr size_t kMaxLimbs = 40;

class RnsBase {
 public:
  RnsBase() = default;
  explicit RnsBase(const std::vector<uint64_t>& primes);

  size_t size() const { return moduli_.size(); }
  const Modulus& operator[](size_t i) const { return moduli_[i]; }
  const std::vector<Modulus>& moduli() const { return moduli_; }

  // Limb count of the base product M.
  size_t limbs() const { return limbs_; }
  const std::vector<uint64_t>& product() const { return product_; }
  const std::vector<uint64_t>& half_product() const { return half_; }
  int product_bits() const { return product_bits_; }

  // CRT composition: residues[k * stride] for each modulus k, written as
  // the unique x in [0, M) over limbs() limbs.
  void compose(const uint64_t* residues, size_t stride, uint64_t* out) const;

  // out[k * stride] = x mod m_k for the n-limb integer x.
  void decompose(const uint64_t* x, size_t n, uint64_t* out,
                 size_t stride) const;

  // Same as decompose but for the signed value x - M when x > M/2 (x is a
  // composed residue). Used to lift centered values into another base.
  void decompose_centered(const uint64_t* x, const RnsBase& from,
                          uint64_t* out, size_t stride) const;

 private:
  std::vector<Modulus> moduli_;
  size_t limbs_ = 0;
  int product_bits_ = 0;
  std::vector<uint64_t> product_;
  std::vector<uint64_t> half_;
  // M / m_k, stored limbs_ wide each.
  std::vector<uint64_t> punctured_;
  std::vector<ShoupMul> inv_punctured_;
  std::vector<uint64_t> r64_;
};

// floor(x / d) for x below 2^(64 * x_limbs), via a precomputed reciprocal.
class Divider {
 public:
  Divider() = default;
  Divider(const std::vector<uint64_t>& divisor, size_t x_limbs);

  size_t quotient_limbs() const { return x_limbs_ - d_limbs_ + 1; }

  // quotient gets quotient_limbs() limbs; remainder gets d_limbs limbs.
  void divide(const uint64_t* x, uint64_t* quotient, uint64_t* remainder) const;

 private:
  std::vector<uint64_t> divisor_;
  size_t d_limbs_ = 0;
  size_t x_limbs_ = 0;
  std::vector<uint64_t> reciprocal_;
};

}  // namespace hheml::bfv

#endif  // HHEML_BFV_RNS_H_
