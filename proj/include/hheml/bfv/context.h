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

// Precomputed tables shared by every BFV object under one parameter set.

#ifndef HHEML_BFV_CONTEXT_H_
#define HHEML_BFV_CONTEXT_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "hheml/bfv/modarith.h"
#include "hheml/bfv/ntt.h"
#include "hheml/bfv/params.h"
#include "hheml/bfv/rns.h"

namespace hheml::bfv {

class BfvContext {
 public:
  // Throws kUnsupportedParams.
  static std::shared_ptr<const BfvContext> create(const BfvParams& params);

  const BfvParams& params() const { return params_; }
  uint64_t params_id() const { return params_id_; }
  size_t n() const { return params_.n; }
  size_t slot_count() const { return params_.n; }
  size_t row_size() const { return params_.n / 2; }
  const Modulus& plain_modulus() const { return plain_; }

  // Ciphertext base q = q_0 ... q_{L-1}.
  const RnsBase& q_base() const { return q_base_; }
  size_t q_size() const { return q_base_.size(); }
  // Key-switching base q_0 ... q_{L-1}, P.
  const RnsBase& key_base() const { return key_base_; }
  // Multiplication base q_0 ... q_{L-1}, b_0 ... b_L.
  const RnsBase& ext_base() const { return ext_base_; }
  // The primes ext_base() adds to q.
  const RnsBase& aux_base() const { return aux_base_; }

  // Transform tables indexed like key_base() and ext_base() respectively.
  const NttTables& key_ntt(size_t i) const { return *key_ntt_[i]; }
  const NttTables& ext_ntt(size_t i) const { return *ext_ntt_[i]; }
  const NttTables& plain_ntt() const { return *plain_ntt_; }

  // floor(q / t) mod q_i.
  uint64_t delta(size_t i) const { return delta_[i]; }
  // Divisions by q after multiplying by t: for tensor products over the
  // extended base and for decryption over q.
  const Divider& scale_divider() const { return scale_div_; }
  const Divider& decrypt_divider() const { return decrypt_div_; }
  const std::vector<uint64_t>& q_half() const { return q_half_; }

  uint64_t special_mod_q(size_t i) const { return p_mod_q_[i]; }
  const ShoupMul& special_inv_mod_q(size_t i) const { return p_inv_mod_q_[i]; }

  // Key-switching digits: (prime index, digit index within the prime).
  struct Digit {
    size_t prime;
    size_t shift;  // bits below this digit in the residue
    bool whole;    // the digit is the full residue
  };
  const std::vector<Digit>& digits() const { return digits_; }

  // Batching: slot s (row = s / row_size) maps to plaintext NTT position
  // slot_index(s).
  uint32_t slot_index(size_t slot) const { return slot_index_[slot]; }

  // Galois element for a left rotation of each row by `step` (negative
  // steps rotate right), and for the row swap.
  uint32_t galois_for_step(int64_t step) const;
  uint32_t galois_row_swap() const { return uint32_t(2 * n() - 1); }

  // Applies X -> X^g to a coefficient-form polynomial modulo q.
  void apply_galois(std::span<const uint64_t> in, uint32_t g, const Modulus& q,
                    std::span<uint64_t> out) const;
  // Same map on an NTT-form polynomial: a permutation of evaluation points.
  std::vector<uint32_t> galois_ntt_permutation(uint32_t g) const;

 private:
  explicit BfvContext(const BfvParams& params);

  BfvParams params_;
  uint64_t params_id_;
  Modulus plain_;
  RnsBase q_base_;
  RnsBase key_base_;
  RnsBase ext_base_;
  RnsBase aux_base_;
  std::vector<std::shared_ptr<NttTables>> key_ntt_;
  std::vector<std::shared_ptr<NttTables>> ext_ntt_;
  std::unique_ptr<NttTables> plain_ntt_;
  std::vector<uint64_t> delta_;
  Divider scale_div_;
  Divider decrypt_div_;
  std::vector<uint64_t> q_half_;
  std::vector<uint64_t> p_mod_q_;
  std::vector<ShoupMul> p_inv_mod_q_;
  std::vector<Digit> digits_;
  std::vector<uint32_t> slot_index_;
};

using ContextPtr = std::shared_ptr<const BfvContext>;

}  // namespace hheml::bfv

#endif  // HHEML_BFV_CONTEXT_H_
