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

// Plaintexts, ciphertexts and keys.
//
// Every serialized object starts with a version byte, a kind byte and the
// 8-byte parameter fingerprint, followed by little-endian 64-bit words.

#ifndef HHEML_BFV_TYPES_H_
#define HHEML_BFV_TYPES_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "hheml/bfv/context.h"
#include "hheml/bytes.h"

namespace hheml::bfv {

inline constexpr uint8_t kSerialVersion = 1;

enum class ObjectKind : uint8_t {
  kCiphertext = 1,
  kPublicKey = 2,
  kRelinKey = 3,
  kGaloisKeys = 4,
  kSecretKey = 5,
};

// Polynomial mod t in coefficient form.
struct Plaintext {
  std::vector<uint64_t> coeffs;
};

// A plaintext lifted to q and transformed, ready for repeated mul_plain.
struct PlainNtt {
  uint64_t params_id = 0;
  std::vector<uint64_t> data;  // L x N
};

class Ciphertext {
 public:
  Ciphertext() = default;
  Ciphertext(const BfvContext& ctx, size_t size);

  size_t size() const { return size_; }
  size_t n() const { return n_; }
  size_t rns_size() const { return rns_; }
  bool is_ntt() const { return is_ntt_; }
  void set_ntt(bool v) { is_ntt_ = v; }
  uint64_t params_id() const { return params_id_; }

  uint64_t* poly(size_t i) { return data_.data() + i * rns_ * n_; }
  const uint64_t* poly(size_t i) const { return data_.data() + i * rns_ * n_; }
  uint64_t* limb(size_t i, size_t k) { return poly(i) + k * n_; }
  const uint64_t* limb(size_t i, size_t k) const { return poly(i) + k * n_; }
  std::span<uint64_t> limb_span(size_t i, size_t k) { return {limb(i, k), n_}; }

  void resize(size_t size);

  Bytes serialize() const;
  size_t serialized_size() const { return 12 + 8 * data_.size(); }
  // Throws kParseError, or kParamMismatch for a foreign parameter set.
  static Ciphertext deserialize(const BfvContext& ctx,
                                std::span<const uint8_t> bytes);

 private:
  size_t size_ = 0;
  size_t n_ = 0;
  size_t rns_ = 0;
  bool is_ntt_ = false;
  uint64_t params_id_ = 0;
  std::vector<uint64_t> data_;
};

// Ternary secret. Only the owner holds this; nothing else in the library
// stores or serializes it implicitly.
class SecretKey {
 public:
  uint64_t params_id = 0;
  std::vector<int8_t> coeffs;
  // NTT form over the key-switching base, (L + 1) x N.
  std::vector<uint64_t> ntt;

  Bytes serialize() const;
  static SecretKey deserialize(const BfvContext& ctx,
                               std::span<const uint8_t> bytes);
};

// (p0, p1) = (-(a s + e), a), NTT form over q.
class PublicKey {
 public:
  uint64_t params_id = 0;
  std::vector<uint64_t> p0;
  std::vector<uint64_t> p1;

  Bytes serialize() const;
  static PublicKey deserialize(const BfvContext& ctx,
                               std::span<const uint8_t> bytes);
};

// Key-switching table: per digit a pair of NTT-form polynomials over the
// key-switching base. Layout [digit][component][prime][coefficient].
struct KSwitchKey {
  std::vector<uint64_t> data;

  const uint64_t* component(const BfvContext& ctx, size_t digit,
                            size_t which) const {
    const size_t poly = ctx.key_base().size() * ctx.n();
    return data.data() + (2 * digit + which) * poly;
  }
};

class RelinKey {
 public:
  uint64_t params_id = 0;
  KSwitchKey key;

  bool empty() const { return key.data.empty(); }
  Bytes serialize() const;
  static RelinKey deserialize(const BfvContext& ctx,
                              std::span<const uint8_t> bytes);
};

class GaloisKeys {
 public:
  uint64_t params_id = 0;
  std::map<uint32_t, KSwitchKey> keys;

  bool has(uint32_t galois_elt) const { return keys.count(galois_elt) != 0; }
  Bytes serialize() const;
  static GaloisKeys deserialize(const BfvContext& ctx,
                                std::span<const uint8_t> bytes);
};

}  // namespace hheml::bfv

#endif  // HHEML_BFV_TYPES_H_
