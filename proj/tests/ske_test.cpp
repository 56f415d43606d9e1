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

#include <gtest/gtest.h>
#include <openssl/evp.h>

#include <cstring>
#include <string>

#include "hheml/errors.h"
#include "hheml/field.h"
#include "hheml/ske.h"

namespace hheml {
namespace {

Prng test_rng(uint8_t tag) {
  Seed s{};
  s[0] = tag;
  s[1] = 0x5e;
  return Prng(s);
}

// Straight-line second implementation of the keystream, written from the
// construction description and sharing no code with the library.
namespace oracle {

constexpr uint64_t P = 65537;

std::vector<uint8_t> shake(const std::vector<uint8_t>& in, size_t len) {
  std::vector<uint8_t> out(len);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_shake128(), nullptr);
  EVP_DigestUpdate(ctx, in.data(), in.size());
  EVP_DigestFinalXOF(ctx, out.data(), len);
  EVP_MD_CTX_free(ctx);
  return out;
}

std::vector<uint64_t> layer(const Nonce& nonce, uint64_t block, uint32_t round,
                            uint8_t branch, size_t t) {
  const std::string tag = "hheml/ske-affine/v1";
  std::vector<uint8_t> in(tag.begin(), tag.end());
  in.insert(in.end(), nonce.begin(), nonce.end());
  for (int i = 0; i < 8; ++i) in.push_back(uint8_t(block >> (8 * i)));
  for (int i = 0; i < 4; ++i) in.push_back(uint8_t(round >> (8 * i)));
  in.push_back(branch);
  const size_t need = t * t + t;
  const auto stream = shake(in, 8 * need + 1024);
  std::vector<uint64_t> out;
  for (size_t pos = 0; out.size() < need; pos += 4) {
    const uint32_t v = uint32_t(stream[pos]) | uint32_t(stream[pos + 1]) << 8 |
                       uint32_t(stream[pos + 2]) << 16 |
                       uint32_t(stream[pos + 3]) << 24;
    if (v < 4294967295u) out.push_back(v % P);
  }
  return out;
}

std::vector<uint64_t> affine(const std::vector<uint64_t>& mc,
                             const std::vector<uint64_t>& v) {
  const size_t t = v.size();
  std::vector<uint64_t> out(t);
  for (size_t i = 0; i < t; ++i) {
    uint64_t acc = mc[t * t + i];
    for (size_t j = 0; j < t; ++j) acc = (acc + mc[i * t + j] * v[j]) % P;
    out[i] = acc;
  }
  return out;
}

std::vector<uint64_t> keystream(const std::vector<uint64_t>& key,
                                const Nonce& nonce, uint64_t block, size_t t,
                                uint32_t rounds) {
  std::vector<uint64_t> l(key.begin(), key.begin() + t);
  std::vector<uint64_t> r(key.begin() + t, key.end());
  for (uint32_t j = 0; j < rounds; ++j) {
    l = affine(layer(nonce, block, j, 0, t), l);
    r = affine(layer(nonce, block, j, 1, t), r);
    for (size_t i = 0; i < t; ++i) {
      const uint64_t a = l[i], b = r[i];
      l[i] = (2 * a + b) % P;
      r[i] = (a + 2 * b) % P;
    }
    if (j + 1 < rounds) {
      for (size_t i = t - 1; i >= 1; --i) {
        l[i] = (l[i] + l[i - 1] * l[i - 1]) % P;
        r[i] = (r[i] + r[i - 1] * r[i - 1]) % P;
      }
    } else {
      for (size_t i = 0; i < t; ++i) {
        l[i] = l[i] * l[i] % P * l[i] % P;
        r[i] = r[i] * r[i] % P * r[i] % P;
      }
    }
  }
  return affine(layer(nonce, block, rounds, 0, t), l);
}

}  // namespace oracle

std::vector<uint64_t> as_u64(const FieldVector& v) {
  return {v.elems().begin(), v.elems().end()};
}

FieldVector random_vector(Prng& rng, size_t len) {
  FieldVector v(len);
  for (size_t i = 0; i < len; ++i) v.set(i, int64_t(rng.uniform(kFieldModulus)));
  return v;
}

TEST(Ske, KeyShape) {
  const CipherConfig cfg;
  Prng rng = test_rng(1);
  const SymmetricKey a = ske_gen(cfg, rng);
  const SymmetricKey b = ske_gen(cfg, rng);
  EXPECT_EQ(a.k.size(), 64u);
  EXPECT_NE(a.k, b.k);
  for (FieldElem e : a.k.elems()) EXPECT_LT(e, kFieldModulus);
}

TEST(Ske, ZeroKeyMatchesStraightLineOracle) {
  const CipherConfig cfg;
  const SymmetricKey key{FieldVector(2 * cfg.t)};
  const Nonce nonce{};
  const auto got = as_u64(keystream_block(cfg, key, nonce, 0));
  const auto want =
      oracle::keystream(std::vector<uint64_t>(2 * cfg.t, 0), nonce, 0, cfg.t,
                        cfg.rounds);
  EXPECT_EQ(got, want);
}

TEST(Ske, RandomKeysMatchOracleAcrossConfigs) {
  Prng rng = test_rng(2);
  for (const CipherConfig cfg :
       {CipherConfig{}, CipherConfig{4, 2}, CipherConfig{8, 4},
        CipherConfig{16, 3}}) {
    for (int trial = 0; trial < 3; ++trial) {
      const SymmetricKey key = ske_gen(cfg, rng);
      Nonce nonce;
      rng.fill(nonce);
      const uint64_t block = rng.next_u64() >> 40;
      EXPECT_EQ(as_u64(keystream_block(cfg, key, nonce, block)),
                oracle::keystream(as_u64(key.k), nonce, block, cfg.t,
                                  cfg.rounds));
    }
  }
}

TEST(Ske, KeystreamIsDeterministicAndIndexSensitive) {
  const CipherConfig cfg;
  Prng rng = test_rng(3);
  const SymmetricKey key = ske_gen(cfg, rng);
  Nonce nonce;
  rng.fill(nonce);
  const FieldVector b0 = keystream_block(cfg, key, nonce, 0);
  EXPECT_EQ(b0, keystream_block(cfg, key, nonce, 0));
  EXPECT_NE(b0, keystream_block(cfg, key, nonce, 1));
  EXPECT_EQ(b0.size(), cfg.t);
}

TEST(Ske, RoundTripLengthFour) {
  const CipherConfig cfg;
  Prng rng = test_rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const SymmetricKey key = ske_gen(cfg, rng);
    const FieldVector x = random_vector(rng, 4);
    Nonce nonce;
    rng.fill(nonce);
    const SymCiphertext c = ske_enc(cfg, key, x, nonce);
    EXPECT_EQ(c.body.size(), x.size());
    EXPECT_EQ(ske_dec(cfg, key, c), x);
  }
}

TEST(Ske, LongInputUsesOneBlockPerChunk) {
  const CipherConfig cfg;
  Prng rng = test_rng(5);
  const SymmetricKey key = ske_gen(cfg, rng);
  const FieldVector x(128);
  Nonce nonce{};
  nonce[3] = 7;
  const SymCiphertext c = ske_enc(cfg, key, x, nonce, 10);
  EXPECT_EQ(c.block_count(cfg), 4u);
  // Zero plaintext exposes the keystream blocks 10..13 themselves.
  for (uint64_t blk = 0; blk < 4; ++blk) {
    const FieldVector ks = keystream_block(cfg, key, nonce, 10 + blk);
    for (size_t i = 0; i < cfg.t; ++i) {
      ASSERT_EQ(c.body[blk * cfg.t + i], ks[i]);
    }
  }
}

TEST(Ske, ZeroBodyDecryptsToNegatedKeystream) {
  const CipherConfig cfg;
  Prng rng = test_rng(6);
  const SymmetricKey key = ske_gen(cfg, rng);
  SymCiphertext c;
  rng.fill(c.nonce);
  c.body = FieldVector(cfg.t);
  const FieldVector x = ske_dec(cfg, key, c);
  const FieldVector ks = keystream_block(cfg, key, c.nonce, 0);
  for (size_t i = 0; i < cfg.t; ++i) ASSERT_EQ(x[i], field_neg(ks[i]));
}

TEST(Ske, WrongKeyDoesNotDecrypt) {
  const CipherConfig cfg;
  Prng rng = test_rng(7);
  const SymmetricKey key = ske_gen(cfg, rng);
  const SymmetricKey other = ske_gen(cfg, rng);
  const FieldVector x = random_vector(rng, 4);
  const SymCiphertext c = ske_enc(cfg, key, x, Nonce{});
  EXPECT_NE(ske_dec(cfg, other, c), x);
}

TEST(Ske, SessionRejectsNonceReuse) {
  const CipherConfig cfg;
  Prng rng = test_rng(8);
  SkeSession session(cfg, ske_gen(cfg, rng), test_rng(9));
  const FieldVector x{1, 2, 3, 4};
  Nonce nonce{};
  nonce[0] = 1;
  session.encrypt(x, nonce);
  try {
    session.encrypt(x, nonce);
    FAIL() << "expected kNonceReuse";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonceReuse);
  }
  const SymCiphertext a = session.encrypt(x);
  const SymCiphertext b = session.encrypt(x);
  EXPECT_NE(a.nonce, b.nonce);
  EXPECT_EQ(session.decrypt(a), x);
}

TEST(Ske, SerializationLayout) {
  const CipherConfig cfg;
  Prng rng = test_rng(10);
  const SymmetricKey key = ske_gen(cfg, rng);
  const FieldVector x = random_vector(rng, 5);
  Nonce nonce;
  rng.fill(nonce);
  const SymCiphertext c = ske_enc(cfg, key, x, nonce, 0x0102030405060708ull);
  const auto bytes = c.serialize();
  ASSERT_EQ(bytes.size(), 1 + 16 + 8 + 4 + 4 * 5u);
  EXPECT_EQ(bytes[0], 1);
  EXPECT_EQ(0, std::memcmp(bytes.data() + 1, nonce.data(), 16));
  EXPECT_EQ(bytes[17], 0x08);
  EXPECT_EQ(bytes[24], 0x01);
  EXPECT_EQ(bytes[25], 5);
  const uint32_t first = uint32_t(bytes[29]) | uint32_t(bytes[30]) << 8 |
                         uint32_t(bytes[31]) << 16 | uint32_t(bytes[32]) << 24;
  EXPECT_EQ(first, c.body[0]);
  EXPECT_EQ(SymCiphertext::deserialize(bytes), c);

  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(SymCiphertext::deserialize(truncated), Error);
  auto bad_elem = bytes;
  bad_elem[29] = bad_elem[30] = bad_elem[31] = bad_elem[32] = 0xff;
  EXPECT_THROW(SymCiphertext::deserialize(bad_elem), Error);
}

TEST(Ske, DepthMatchesRoundStructure) {
  EXPECT_EQ(keystream_depth(CipherConfig{}), 4);
  EXPECT_LE(keystream_depth(CipherConfig{}), 4);
  for (uint32_t rounds = 2; rounds <= 6; ++rounds) {
    EXPECT_EQ(keystream_depth(CipherConfig{8, rounds}), int(rounds - 1) + 2);
  }
}

TEST(Ske, ConfigValidation) {
  EXPECT_THROW(CipherConfig({3, 3}).validate(), Error);
  EXPECT_THROW(CipherConfig({32, 1}).validate(), Error);
  EXPECT_NO_THROW(CipherConfig({4, 2}).validate());
  const CipherConfig cfg;
  SymmetricKey short_key{FieldVector(10)};
  EXPECT_THROW(keystream_block(cfg, short_key, Nonce{}, 0), Error);
}

TEST(SkeProperty, EncDecInverseForRandomLengths) {
  Prng rng = test_rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const CipherConfig cfg{uint32_t(4 + rng.uniform(12)),
                           uint32_t(2 + rng.uniform(2))};
    const SymmetricKey key = ske_gen(cfg, rng);
    const FieldVector x = random_vector(rng, 1 + rng.uniform(40));
    Nonce nonce;
    rng.fill(nonce);
    const uint64_t ctr = rng.next_u64() >> 1;
    ASSERT_EQ(ske_dec(cfg, key, ske_enc(cfg, key, x, nonce, ctr)), x);
  }
}

}  // namespace
}  // namespace hheml
