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

// HE-friendly symmetric stream cipher over Z_p.
//
// A keystream block is t field elements derived from the key, a public
// nonce and a block counter. The round function alternates public affine
// layers (fresh matrices per nonce/counter/round), a branch mix and a
// low-degree nonlinear layer, so its multiplicative depth stays small enough
// to be re-evaluated under BFV.

#ifndef HHEML_SKE_H_
#define HHEML_SKE_H_

#include <algorithm>
#include <array>
#include <cstdint>
#include <set>
#include <span>
#include <vector>

#include "hheml/field.h"
#include "hheml/random.h"

namespace hheml {

struct CipherConfig {
  uint32_t t = 32;       // keystream block width
  uint32_t rounds = 3;

  // Throws kConfigMismatch when t < 4 or rounds < 2.
  void validate() const;
  bool operator==(const CipherConfig&) const = default;
};

using Nonce = std::array<uint8_t, 16>;

enum class Branch : uint8_t { kLeft = 0, kRight = 1 };

struct SymmetricKey {
  FieldVector k;  // length 2t: left branch then right branch
};

// out = matrix * in + constant over Z_p; matrix is row-major t x t.
struct AffineLayer {
  uint32_t t = 0;
  std::vector<FieldElem> matrix;
  std::vector<FieldElem> constant;

  FieldElem at(uint32_t row, uint32_t col) const { return matrix[row * t + col]; }
  std::vector<FieldElem> apply(std::span<const FieldElem> in) const;
};

// Affine layer used in `round` (round == cfg.rounds is the output layer,
// which only exists for the left branch).
AffineLayer affine_layer(const CipherConfig& cfg, const Nonce& nonce,
                         uint64_t block_index, uint32_t round, Branch branch);

SymmetricKey ske_gen(const CipherConfig& cfg, Prng& rng);
SymmetricKey ske_gen(const CipherConfig& cfg);

FieldVector keystream_block(const CipherConfig& cfg, const SymmetricKey& key,
                            const Nonce& nonce, uint64_t block_index);

// Multiplicative depth of one keystream block as an arithmetic circuit,
// measured by running the round function over a depth-tracking domain.
int keystream_depth(const CipherConfig& cfg);

struct SymCiphertext {
  static constexpr uint8_t kVersion = 1;

  Nonce nonce{};
  uint64_t start_counter = 0;
  FieldVector body;

  // Number of keystream blocks covering the body.
  uint64_t block_count(const CipherConfig& cfg) const {
    return (body.size() + cfg.t - 1) / cfg.t;
  }

  // version | nonce | counter (LE64) | length (LE32) | elements (LE32 each)
  std::vector<uint8_t> serialize() const;
  static SymCiphertext deserialize(std::span<const uint8_t> bytes);
  bool operator==(const SymCiphertext&) const = default;
};

SymCiphertext ske_enc(const CipherConfig& cfg, const SymmetricKey& key,
                      const FieldVector& x, const Nonce& nonce,
                      uint64_t start_counter = 0);
FieldVector ske_dec(const CipherConfig& cfg, const SymmetricKey& key,
                    const SymCiphertext& c);

// Holds one key and refuses to encrypt twice under the same nonce. Not
// thread-safe.
class SkeSession {
 public:
  SkeSession(CipherConfig cfg, SymmetricKey key, Prng rng);

  // Fresh random nonce.
  SymCiphertext encrypt(const FieldVector& x);
  // Throws kNonceReuse if `nonce` was already used in this session.
  SymCiphertext encrypt(const FieldVector& x, const Nonce& nonce);
  FieldVector decrypt(const SymCiphertext& c) const;

  const SymmetricKey& key() const { return key_; }
  const CipherConfig& config() const { return cfg_; }

 private:
  CipherConfig cfg_;
  SymmetricKey key_;
  Prng rng_;
  std::set<Nonce> used_;
};

}  // namespace hheml

#endif  // HHEML_SKE_H_
