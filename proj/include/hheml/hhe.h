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

// Hybrid homomorphic encryption: data travels under the symmetric cipher,
// the symmetric key travels under BFV, and the server converts symmetric
// ciphertexts into BFV ciphertexts by evaluating the keystream circuit on
// the encrypted key.
//
// Slot layout (per row of N/2 slots): keystream block r occupies slots
// [r(t+1)+1, r(t+1)+1+t), each block preceded by one gap slot that stays
// zero. Row 0 carries the left cipher branch, row 1 the right branch.
// Linear outputs land at slots k * D for output k, D a power of two that
// covers every data slot.

#ifndef HHEML_HHE_H_
#define HHEML_HHE_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hheml/bfv/context.h"
#include "hheml/bfv/keygen.h"
#include "hheml/bfv/types.h"
#include "hheml/bytes.h"
#include "hheml/field.h"
#include "hheml/model.h"
#include "hheml/random.h"
#include "hheml/ske.h"

namespace hheml {

struct HheParams {
  bfv::Preset preset = bfv::Preset::kToy;
  CipherConfig cipher{};
  // Widest data vector and largest model output count the evaluation keys
  // must support.
  size_t max_inputs = 128;
  size_t max_outputs = 1;
};

class HheContext {
 public:
  // Throws kUnsupportedParams when the layout does not fit the ring.
  explicit HheContext(const HheParams& params);
  HheContext(const HheParams& params, const bfv::BfvParams& bfv_params);

  const HheParams& params() const { return params_; }
  const CipherConfig& cipher() const { return params_.cipher; }
  const bfv::ContextPtr& bfv() const { return bfv_; }

  // Number of block regions one row holds.
  size_t region_capacity() const { return regions_; }
  size_t region_base(size_t r) const { return r * (params_.cipher.t + 1) + 1; }
  // Slot of data element i after transciphering.
  size_t data_slot(size_t i) const;
  // Output stride D.
  size_t output_stride() const { return stride_; }
  size_t output_slot(size_t k) const { return k * stride_; }

  // Baby-step count B and giant-step count G for the affine layers.
  uint32_t baby_steps() const { return baby_; }
  uint32_t giant_steps() const { return giant_; }

  // Rotation steps the evaluation keys must cover.
  std::vector<int64_t> required_steps() const;

 private:
  void init();

  HheParams params_;
  bfv::ContextPtr bfv_;
  size_t regions_ = 0;
  size_t stride_ = 0;
  uint32_t baby_ = 0;
  uint32_t giant_ = 0;
};

// Public evaluation material: relinearization and rotation keys.
struct EvalKeys {
  bfv::RelinKey rk;
  bfv::GaloisKeys gk;

  Bytes serialize() const;
  static EvalKeys deserialize(const bfv::BfvContext& ctx,
                              std::span<const uint8_t> bytes);
};

struct HheKeyBundle {
  bfv::PublicKey pk;
  bfv::SecretKey sk;
  EvalKeys evk;
};

HheKeyBundle hhe_keygen(const HheContext& hc, Prng& rng);

// The symmetric key under BFV, laid out for transciphering.
struct EncryptedKey {
  std::vector<bfv::Ciphertext> cts;

  Bytes serialize() const;
  static EncryptedKey deserialize(const bfv::BfvContext& ctx,
                                  std::span<const uint8_t> bytes);
};

EncryptedKey encrypt_symmetric_key(const HheContext& hc,
                                   const bfv::PublicKey& pk,
                                   const SymmetricKey& key, Prng& rng);

// Client side of the scheme: one symmetric key per session, encrypted once
// under BFV, then any number of inputs under fresh nonces.
class HheUserSession {
 public:
  HheUserSession(const HheContext& hc, const bfv::PublicKey& pk, Prng rng);

  const EncryptedKey& encrypted_key() const { return encrypted_key_; }
  // Throws kLayoutMismatch when x does not fit one ciphertext.
  SymCiphertext encrypt(const FieldVector& x);

 private:
  const HheContext* hc_;
  Prng rng_;
  SkeSession ske_;
  EncryptedKey encrypted_key_;
};

struct HheCiphertexts {
  SymCiphertext sym;
  EncryptedKey key;
};

// Fresh key, symmetric encryption of x, BFV encryption of the key.
HheCiphertexts hhe_enc(const HheContext& hc, const bfv::PublicKey& pk,
                       const FieldVector& x, Prng& rng);

// BFV encryption of the plaintext behind `c`, element i at data_slot(i) and
// zero elsewhere. Throws kConfigMismatch, kLayoutMismatch, kMissingEvalKey.
bfv::Ciphertext hhe_decomp(const HheContext& hc, const EvalKeys& evk,
                           const SymCiphertext& c, const EncryptedKey& ck);

// Order-preserving fan-out over worker threads (threads <= 1 runs inline).
std::vector<bfv::Ciphertext> hhe_decomp_batch(
    const HheContext& hc, const EvalKeys& evk,
    const std::vector<SymCiphertext>& cs, const EncryptedKey& ck,
    size_t threads);

// Model under BFV with weights at the data slots of each output region.
struct EncryptedModel {
  size_t n_out = 0;
  size_t dim = 0;
  bfv::Ciphertext c_w;
  bfv::Ciphertext c_b;

  Bytes serialize() const;
  static EncryptedModel deserialize(const bfv::BfvContext& ctx,
                                    std::span<const uint8_t> bytes);
};

EncryptedModel encrypt_model(const HheContext& hc, const bfv::PublicKey& pk,
                             const ModelParams& model, Prng& rng);

// w x + b per output, each at output_slot(k), all other slots zero.
// Throws kLayoutMismatch when the model does not fit the layout.
bfv::Ciphertext hhe_eval_linear(const HheContext& hc, const EvalKeys& evk,
                                const ModelParams& model,
                                const bfv::Ciphertext& cx);
bfv::Ciphertext hhe_eval_linear(const HheContext& hc, const EvalKeys& evk,
                                const EncryptedModel& model,
                                const bfv::Ciphertext& cx);

// Centered outputs read from output_slot(0 .. n_outputs).
std::vector<int64_t> hhe_dec(const HheContext& hc, const bfv::SecretKey& sk,
                             const bfv::Ciphertext& c_res, size_t n_outputs);

// Data elements read back from data_slot(0 .. len) of a transciphered
// ciphertext.
FieldVector hhe_dec_data(const HheContext& hc, const bfv::SecretKey& sk,
                         const bfv::Ciphertext& c, size_t len);

}  // namespace hheml

#endif  // HHEML_HHE_H_
