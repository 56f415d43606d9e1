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

// Randomness and extendable-output hashing.

#ifndef HHEML_RANDOM_H_
#define HHEML_RANDOM_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace hheml {

using Seed = std::array<uint8_t, 32>;

// Fills `out` from the operating system CSPRNG. Throws kRngFailure.
void os_random_bytes(std::span<uint8_t> out);
Seed fresh_seed();

// SHAKE128 output of `length` bytes over the concatenation of `parts`.
std::vector<uint8_t> shake128(std::span<const std::span<const uint8_t>> parts,
                              size_t length);
std::array<uint8_t, 32> sha256(std::span<const uint8_t> data);

// Deterministic cryptographic generator: the ChaCha20 keystream under a
// 256-bit seed. Not thread-safe; give each thread its own instance.
class Prng {
 public:
  explicit Prng(const Seed& seed);
  // Seeds from the OS.
  Prng();

  // Independent child generator; the label separates domains.
  Prng derive(std::string_view label) const;

  void fill(std::span<uint8_t> out);
  uint64_t next_u64();
  uint32_t next_u32();
  // Uniform in [0, bound).
  uint64_t uniform(uint64_t bound);

  const Seed& seed() const { return seed_; }

 private:
  void refill();

  Seed seed_;
  uint64_t block_counter_ = 0;
  std::array<uint8_t, 4096> buffer_{};
  size_t pos_ = sizeof(buffer_);
};

}  // namespace hheml

#endif  // HHEML_RANDOM_H_
