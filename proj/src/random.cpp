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

#include "hheml/random.h"

#include <openssl/evp.h>
#include <openssl/rand.h>

#include <cstring>
#include <memory>
#include <string>

#include "hheml/errors.h"

namespace hheml {

namespace {

struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};
struct CipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};

}  // namespace

void os_random_bytes(std::span<uint8_t> out) {
  if (out.empty()) return;
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) {
    fail(ErrorCode::kRngFailure, "RAND_bytes failed");
  }
}

Seed fresh_seed() {
  Seed s;
  os_random_bytes(s);
  return s;
}

std::vector<uint8_t> shake128(std::span<const std::span<const uint8_t>> parts,
                              size_t length) {
  std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_shake128(), nullptr) != 1) {
    fail(ErrorCode::kRngFailure, "SHAKE128 init failed");
  }
  for (auto part : parts) {
    if (EVP_DigestUpdate(ctx.get(), part.data(), part.size()) != 1) {
      fail(ErrorCode::kRngFailure, "SHAKE128 update failed");
    }
  }
  std::vector<uint8_t> out(length);
  if (EVP_DigestFinalXOF(ctx.get(), out.data(), out.size()) != 1) {
    fail(ErrorCode::kRngFailure, "SHAKE128 squeeze failed");
  }
  return out;
}

std::array<uint8_t, 32> sha256(std::span<const uint8_t> data) {
  std::array<uint8_t, 32> out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(),
                 nullptr) != 1) {
    fail(ErrorCode::kRngFailure, "SHA-256 failed");
  }
  return out;
}

Prng::Prng(const Seed& seed) : seed_(seed) {}

Prng::Prng() : seed_(fresh_seed()) {}

Prng Prng::derive(std::string_view label) const {
  const std::span<const uint8_t> parts[] = {
      std::span<const uint8_t>(seed_),
      std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(label.data()),
                               label.size())};
  auto bytes = shake128(parts, 32);
  Seed child;
  std::memcpy(child.data(), bytes.data(), child.size());
  return Prng(child);
}

void Prng::refill() {
  std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter> ctx(EVP_CIPHER_CTX_new());
  // OpenSSL's ChaCha20 IV is a 32-bit block counter followed by a 96-bit
  // nonce; the nonce carries our 64-bit buffer counter.
  uint8_t iv[16] = {0};
  for (int i = 0; i < 8; ++i) iv[8 + i] = uint8_t(block_counter_ >> (8 * i));
  ++block_counter_;
  int outl = 0;
  static const uint8_t zeros[sizeof(buffer_)] = {0};
  if (!ctx ||
      EVP_EncryptInit_ex(ctx.get(), EVP_chacha20(), nullptr, seed_.data(),
                         iv) != 1 ||
      EVP_EncryptUpdate(ctx.get(), buffer_.data(), &outl, zeros,
                        sizeof(buffer_)) != 1) {
    fail(ErrorCode::kRngFailure, "ChaCha20 keystream failed");
  }
  pos_ = 0;
}

void Prng::fill(std::span<uint8_t> out) {
  size_t done = 0;
  while (done < out.size()) {
    if (pos_ == buffer_.size()) refill();
    size_t n = std::min(out.size() - done, buffer_.size() - pos_);
    std::memcpy(out.data() + done, buffer_.data() + pos_, n);
    pos_ += n;
    done += n;
  }
}

uint64_t Prng::next_u64() {
  uint8_t b[8];
  fill(b);
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

uint32_t Prng::next_u32() {
  uint8_t b[4];
  fill(b);
  return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 |
         uint32_t(b[3]) << 24;
}

uint64_t Prng::uniform(uint64_t bound) {
  if (bound == 0) fail(ErrorCode::kRngFailure, "empty range");
  // Rejection sampling against the largest multiple of bound.
  const uint64_t limit = UINT64_MAX - (UINT64_MAX % bound + 1) % bound;
  uint64_t v;
  do {
    v = next_u64();
  } while (v > limit);
  return v % bound;
}

}  // namespace hheml
