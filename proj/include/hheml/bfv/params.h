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

// BFV parameter sets.
//
// The ciphertext modulus q is a product of NTT-friendly primes below 2^61.
// Key switching works in the larger modulus q * P with one extra special
// prime P; each q prime's residue may be split further into digits of
// decomp_base_log bits.

#ifndef HHEML_BFV_PARAMS_H_
#define HHEML_BFV_PARAMS_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hheml::bfv {

inline constexpr uint64_t kPlainModulus = 65537;

// kMicro is a reduced ring used only to keep exhaustive tests tractable.
enum class Preset : uint8_t { kMicro = 0, kToy = 1, kDefault = 2, kCustom = 3 };

std::string_view preset_name(Preset p);
// Accepts "micro", "toy", "default". Throws kUnsupportedParams otherwise.
Preset parse_preset(std::string_view name);

struct BfvParams {
  Preset preset = Preset::kToy;
  size_t n = 4096;
  std::vector<uint64_t> q;
  uint64_t special_prime = 0;
  uint64_t plain_modulus = kPlainModulus;
  int decomp_base_log = 61;

  static BfvParams from_preset(Preset p);
  // `count` primes of `prime_bits` bits plus a special prime of the same
  // size, all 1 mod 2n.
  static BfvParams generate(Preset tag, size_t n, int prime_bits, size_t count,
                            int decomp_base_log = 61);

  // Multiplicative depth the preset is documented to support.
  int supported_depth() const;
  int q_bits() const;
  size_t slot_count() const { return n; }
  // Digits per q prime in key switching.
  size_t digits_per_prime(size_t i) const;
  size_t digit_count() const;

  // Fingerprint over every field; carried by serialized keys and
  // ciphertexts.
  uint64_t id() const;

  // Throws kUnsupportedParams.
  void validate() const;

  bool operator==(const BfvParams&) const = default;
};

}  // namespace hheml::bfv

#endif  // HHEML_BFV_PARAMS_H_
