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

#ifndef HHEML_BFV_ENCRYPTOR_H_
#define HHEML_BFV_ENCRYPTOR_H_

#include "hheml/bfv/context.h"
#include "hheml/bfv/types.h"
#include "hheml/random.h"

namespace hheml::bfv {

class Encryptor {
 public:
  Encryptor(ContextPtr ctx, PublicKey pk);

  // Throws kSlotOverflow if a coefficient is not below t, kParamMismatch
  // for a key from another parameter set.
  Ciphertext encrypt(const Plaintext& m, Prng& rng) const;
  // Uses a generator seeded from the OS.
  Ciphertext encrypt(const Plaintext& m) const;

 private:
  ContextPtr ctx_;
  PublicKey pk_;
};

class Decryptor {
 public:
  Decryptor(ContextPtr ctx, SecretKey sk);

  // Throws kNoiseOverflow when the noise budget is exhausted.
  Plaintext decrypt(const Ciphertext& c) const;
  // Remaining bits before decryption fails; 0 means exhausted.
  int noise_budget(const Ciphertext& c) const;

 private:
  // Plaintext coefficients and the budget in one pass.
  int decrypt_core(const Ciphertext& c, Plaintext* out) const;

  ContextPtr ctx_;
  SecretKey sk_;
};

}  // namespace hheml::bfv

#endif  // HHEML_BFV_ENCRYPTOR_H_
