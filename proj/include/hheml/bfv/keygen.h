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

#ifndef HHEML_BFV_KEYGEN_H_
#define HHEML_BFV_KEYGEN_H_

#include <cstdint>
#include <vector>

#include "hheml/bfv/context.h"
#include "hheml/bfv/types.h"
#include "hheml/random.h"

namespace hheml::bfv {

class KeyGenerator {
 public:
  // Samples a fresh ternary secret.
  KeyGenerator(ContextPtr ctx, Prng rng);
  KeyGenerator(ContextPtr ctx, SecretKey sk, Prng rng);

  const SecretKey& secret_key() const { return sk_; }
  PublicKey create_public_key();
  RelinKey create_relin_key();
  // Keys for left rotations by each step (negative = right), optionally
  // with the row swap.
  GaloisKeys create_galois_keys(const std::vector<int64_t>& steps,
                                bool row_swap);
  // Steps +-1, +-2, ..., +-N/4 and the row swap.
  GaloisKeys create_galois_keys();

  // Power-of-two steps in both directions up to a row.
  static std::vector<int64_t> power_of_two_steps(size_t row_size);

 private:
  // Key switching from `target` (NTT over the key base) to the secret.
  KSwitchKey make_kswitch(const std::vector<uint64_t>& target);

  ContextPtr ctx_;
  Prng rng_;
  SecretKey sk_;
};

struct KeySet {
  SecretKey sk;
  PublicKey pk;
  RelinKey rk;
  GaloisKeys gk;
};

// One-call key generation. An empty `steps` selects the power-of-two set.
KeySet he_keygen(const ContextPtr& ctx, Prng& rng,
                 const std::vector<int64_t>& steps = {});

}  // namespace hheml::bfv

#endif  // HHEML_BFV_KEYGEN_H_
