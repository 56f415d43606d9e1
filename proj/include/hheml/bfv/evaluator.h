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

// Homomorphic operations. Operands must share the evaluator's parameter set
// (kParamMismatch otherwise). Unless stated, inputs and outputs are in
// coefficient form.

#ifndef HHEML_BFV_EVALUATOR_H_
#define HHEML_BFV_EVALUATOR_H_

#include <cstdint>
#include <vector>

#include "hheml/bfv/context.h"
#include "hheml/bfv/types.h"

namespace hheml::bfv {

class Evaluator {
 public:
  explicit Evaluator(ContextPtr ctx) : ctx_(std::move(ctx)) {}

  const BfvContext& context() const { return *ctx_; }

  // Linear operations accept either domain as long as both operands match.
  Ciphertext add(const Ciphertext& a, const Ciphertext& b) const;
  Ciphertext sub(const Ciphertext& a, const Ciphertext& b) const;
  void add_inplace(Ciphertext& a, const Ciphertext& b) const;
  void sub_inplace(Ciphertext& a, const Ciphertext& b) const;
  Ciphertext negate(const Ciphertext& a) const;
  // Multiplies by an integer taken mod t and centered.
  Ciphertext mul_scalar(const Ciphertext& a, uint64_t scalar) const;

  Ciphertext add_plain(const Ciphertext& a, const Plaintext& p) const;
  Ciphertext sub_plain(const Ciphertext& a, const Plaintext& p) const;

  PlainNtt prepare(const Plaintext& p) const;
  // Keeps the domain of `a`.
  Ciphertext mul_plain(const Ciphertext& a, const PlainNtt& p) const;
  Ciphertext mul_plain(const Ciphertext& a, const Plaintext& p) const;
  // acc += a * p with both in NTT form; acc may be empty on first use.
  void mul_plain_accumulate(Ciphertext& acc, const Ciphertext& a,
                            const PlainNtt& p) const;

  void to_ntt(Ciphertext& a) const;
  void from_ntt(Ciphertext& a) const;

  // Size-3 product; relinearize() brings it back to size 2.
  Ciphertext multiply(const Ciphertext& a, const Ciphertext& b) const;
  Ciphertext relinearize(const Ciphertext& a, const RelinKey& rk) const;
  Ciphertext mul_relin(const Ciphertext& a, const Ciphertext& b,
                       const RelinKey& rk) const;
  Ciphertext square_relin(const Ciphertext& a, const RelinKey& rk) const;

  // Left rotation of both rows by `step` (negative = right).
  Ciphertext rotate_rows(const Ciphertext& a, int64_t step,
                         const GaloisKeys& gk) const;
  Ciphertext swap_rows(const Ciphertext& a, const GaloisKeys& gk) const;
  Ciphertext apply_galois(const Ciphertext& a, uint32_t galois_elt,
                          const GaloisKeys& gk) const;
  // Several rotations of one ciphertext sharing a single decomposition.
  std::vector<Ciphertext> rotate_many(const Ciphertext& a,
                                      const std::vector<int64_t>& steps,
                                      const GaloisKeys& gk) const;

 private:
  void check(const Ciphertext& a) const;
  void check_pair(const Ciphertext& a, const Ciphertext& b) const;
  const KSwitchKey& galois_key(const GaloisKeys& gk, uint32_t g) const;

  // Digit decomposition of an L x N coefficient-form polynomial, each
  // digit in NTT form over the key-switching base.
  std::vector<uint64_t> decompose(const uint64_t* poly) const;
  // out0 + out1 * s ~ (poly under `perm`) * target, over q in coefficient
  // form. `perm` is an NTT-domain Galois permutation or null.
  void key_switch(const std::vector<uint64_t>& digits, const uint32_t* perm,
                  const KSwitchKey& key, uint64_t* out0, uint64_t* out1) const;

  // Extends an L x N coefficient polynomial to the multiplication base and
  // transforms it.
  void extend_to_ntt(const uint64_t* poly, uint64_t* out) const;

  ContextPtr ctx_;
};

}  // namespace hheml::bfv

#endif  // HHEML_BFV_EVALUATOR_H_
