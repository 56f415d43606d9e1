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

#include <boost/multiprecision/cpp_int.hpp>
#include <algorithm>
#include <chrono>
#include <vector>

#include "hheml/bfv/context.h"
#include "hheml/bfv/encoder.h"
#include "hheml/bfv/encryptor.h"
#include "hheml/bfv/evaluator.h"
#include "hheml/bfv/keygen.h"
#include "hheml/bfv/ntt.h"
#include "hheml/bfv/rns.h"
#include "hheml/errors.h"
#include "hheml/field.h"

namespace hheml::bfv {
namespace {

using boost::multiprecision::cpp_int;

Seed seed_of(uint8_t tag) {
  Seed s{};
  s[0] = tag;
  return s;
}

std::vector<uint64_t> random_slots(Prng& rng, size_t n) {
  std::vector<uint64_t> v(n);
  for (auto& x : v) x = rng.uniform(kPlainModulus);
  return v;
}

// Schoolbook product in Z_q[X]/(X^n + 1).
std::vector<uint64_t> negacyclic_oracle(const std::vector<uint64_t>& a,
                                        const std::vector<uint64_t>& b,
                                        uint64_t q) {
  const size_t n = a.size();
  std::vector<cpp_int> acc(n, 0);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      const cpp_int p = cpp_int(a[i]) * b[j];
      if (i + j < n) {
        acc[i + j] += p;
      } else {
        acc[i + j - n] -= p;
      }
    }
  }
  std::vector<uint64_t> out(n);
  for (size_t i = 0; i < n; ++i) {
    cpp_int r = acc[i] % q;
    if (r < 0) r += q;
    out[i] = static_cast<uint64_t>(r);
  }
  return out;
}

TEST(ModArith, BarrettMatchesWideDivision) {
  Prng rng(seed_of(1));
  const Modulus m((uint64_t{1} << 60) - 93);
  for (int i = 0; i < 10000; ++i) {
    const u128 x = (u128(rng.next_u64() >> 4) << 64) | rng.next_u64();
    EXPECT_EQ(m.reduce128(x), uint64_t(x % m.value()));
  }
}

TEST(ModArith, NttPrimesAreCongruent) {
  const auto primes = find_ntt_primes(60, 2 * 8192, 5);
  ASSERT_EQ(primes.size(), 5u);
  for (uint64_t p : primes) {
    EXPECT_TRUE(is_prime(p));
    EXPECT_EQ(p % (2 * 8192), 1u);
    EXPECT_EQ(64 - __builtin_clzll(p), 60);
  }
}

TEST(Ntt, ProductMatchesSchoolbook) {
  const size_t n = 64;
  const Modulus q(find_ntt_primes(50, 2 * n, 1)[0]);
  NttTables ntt(n, q);
  Prng rng(seed_of(2));
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<uint64_t> a(n), b(n);
    for (auto& v : a) v = rng.uniform(q.value());
    for (auto& v : b) v = rng.uniform(q.value());
    const auto expected = negacyclic_oracle(a, b, q.value());
    auto fa = a, fb = b;
    ntt.forward(fa);
    ntt.forward(fb);
    for (size_t i = 0; i < n; ++i) fa[i] = q.mul(fa[i], fb[i]);
    ntt.inverse(fa);
    EXPECT_EQ(fa, expected);
  }
}

TEST(Ntt, InverseUndoesForward) {
  const size_t n = 4096;
  const Modulus q(find_ntt_primes(60, 2 * n, 1)[0]);
  NttTables ntt(n, q);
  Prng rng(seed_of(3));
  std::vector<uint64_t> a(n);
  for (auto& v : a) v = rng.uniform(q.value());
  auto b = a;
  ntt.forward(b);
  ntt.inverse(b);
  EXPECT_EQ(a, b);
}

TEST(Rns, ComposeMatchesCrtOracle) {
  const auto primes = find_ntt_primes(60, 1 << 14, 6);
  RnsBase base(primes);
  cpp_int m = 1;
  for (uint64_t p : primes) m *= p;
  Prng rng(seed_of(4));
  for (int trial = 0; trial < 500; ++trial) {
    cpp_int x = 0;
    for (int w = 0; w < 6; ++w) x = (x << 64) | rng.next_u64();
    x %= m;
    std::vector<uint64_t> residues;
    for (uint64_t p : primes) residues.push_back(static_cast<uint64_t>(x % p));
    std::vector<uint64_t> limbs(base.limbs());
    base.compose(residues.data(), 1, limbs.data());
    cpp_int back = 0;
    for (size_t i = limbs.size(); i-- > 0;) back = (back << 64) | limbs[i];
    EXPECT_EQ(back, x);
    std::vector<uint64_t> again(primes.size());
    base.decompose(limbs.data(), limbs.size(), again.data(), 1);
    EXPECT_EQ(again, residues);
  }
}

TEST(Rns, DividerMatchesOracle) {
  const auto primes = find_ntt_primes(60, 1 << 14, 4);
  RnsBase base(primes);
  Divider div(base.product(), base.limbs() + 3);
  cpp_int d = 0;
  for (size_t i = base.limbs(); i-- > 0;) d = (d << 64) | base.product()[i];
  Prng rng(seed_of(5));
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<uint64_t> x(base.limbs() + 3);
    for (auto& v : x) v = rng.next_u64();
    cpp_int xv = 0;
    for (size_t i = x.size(); i-- > 0;) xv = (xv << 64) | x[i];
    std::vector<uint64_t> q(div.quotient_limbs()), r(base.limbs());
    div.divide(x.data(), q.data(), r.data());
    cpp_int qv = 0, rv = 0;
    for (size_t i = q.size(); i-- > 0;) qv = (qv << 64) | q[i];
    for (size_t i = r.size(); i-- > 0;) rv = (rv << 64) | r[i];
    EXPECT_EQ(qv, xv / d);
    EXPECT_EQ(rv, xv % d);
  }
}

class BfvToy : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    ctx_ = BfvContext::create(BfvParams::from_preset(Preset::kToy));
    Prng rng(seed_of(9));
    keys_ = new KeySet(he_keygen(ctx_, rng, {1, -1, 2, 5}));
  }
  static void TearDownTestSuite() {
    delete keys_;
    keys_ = nullptr;
    ctx_.reset();
  }

  static ContextPtr ctx_;
  static KeySet* keys_;
};

ContextPtr BfvToy::ctx_;
KeySet* BfvToy::keys_ = nullptr;

TEST_F(BfvToy, EncodeDecodeIdentity) {
  BatchEncoder enc(ctx_);
  Prng rng(seed_of(10));
  const auto v = random_slots(rng, ctx_->slot_count());
  const FieldVector out = enc.decode(enc.encode(v));
  for (size_t i = 0; i < v.size(); ++i) ASSERT_EQ(out[i], v[i]);
}

TEST_F(BfvToy, EncryptDecryptIdentity) {
  BatchEncoder enc(ctx_);
  Encryptor encryptor(ctx_, keys_->pk);
  Decryptor decryptor(ctx_, keys_->sk);
  Prng rng(seed_of(11));
  const auto v = random_slots(rng, ctx_->slot_count());
  const Ciphertext c = encryptor.encrypt(enc.encode(v), rng);
  EXPECT_GT(decryptor.noise_budget(c), 0);
  const FieldVector out = enc.decode(decryptor.decrypt(c));
  for (size_t i = 0; i < v.size(); ++i) ASSERT_EQ(out[i], v[i]);
}

TEST_F(BfvToy, MultiplyRelinearize) {
  BatchEncoder enc(ctx_);
  Encryptor encryptor(ctx_, keys_->pk);
  Decryptor decryptor(ctx_, keys_->sk);
  Evaluator ev(ctx_);
  Prng rng(seed_of(12));
  const auto a = random_slots(rng, ctx_->slot_count());
  const auto b = random_slots(rng, ctx_->slot_count());
  const Ciphertext ca = encryptor.encrypt(enc.encode(a), rng);
  const Ciphertext cb = encryptor.encrypt(enc.encode(b), rng);
  const Ciphertext prod = ev.multiply(ca, cb);
  const FieldVector raw = enc.decode(decryptor.decrypt(prod));
  const Ciphertext rel = ev.relinearize(prod, keys_->rk);
  const FieldVector out = enc.decode(decryptor.decrypt(rel));
  for (size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(raw[i], field_mul(FieldElem(a[i]), FieldElem(b[i])));
    ASSERT_EQ(out[i], field_mul(FieldElem(a[i]), FieldElem(b[i])));
  }
  EXPECT_LT(decryptor.noise_budget(rel), decryptor.noise_budget(ca));
}

TEST_F(BfvToy, RotateStepOne) {
  BatchEncoder enc(ctx_);
  Encryptor encryptor(ctx_, keys_->pk);
  Decryptor decryptor(ctx_, keys_->sk);
  Evaluator ev(ctx_);
  const size_t row = ctx_->row_size();
  std::vector<uint64_t> v = {1, 2, 3, 4};
  const Ciphertext c = encryptor.encrypt(enc.encode(v));
  const FieldVector out =
      enc.decode(decryptor.decrypt(ev.rotate_rows(c, 1, keys_->gk)));
  EXPECT_EQ(out[0], 2u);
  EXPECT_EQ(out[1], 3u);
  EXPECT_EQ(out[2], 4u);
  EXPECT_EQ(out[3], 0u);
  EXPECT_EQ(out[row - 1], 1u);
}

TEST_F(BfvToy, AddExample) {
  BatchEncoder enc(ctx_);
  Encryptor encryptor(ctx_, keys_->pk);
  Decryptor decryptor(ctx_, keys_->sk);
  Evaluator ev(ctx_);
  std::vector<uint64_t> v = {1, 2, 3, 4, 5, 6, 7, 8};
  const Ciphertext c = encryptor.encrypt(enc.encode(v));
  const FieldVector out = enc.decode(decryptor.decrypt(ev.add(c, c)));
  for (size_t i = 0; i < 8; ++i) EXPECT_EQ(out[i], 2 * (i + 1));
  for (size_t i = 8; i < out.size(); ++i) ASSERT_EQ(out[i], 0u);
}

TEST_F(BfvToy, MulRelinExample) {
  BatchEncoder enc(ctx_);
  Encryptor encryptor(ctx_, keys_->pk);
  Decryptor decryptor(ctx_, keys_->sk);
  Evaluator ev(ctx_);
  const Ciphertext a = encryptor.encrypt(enc.encode(std::vector<uint64_t>{3}));
  const Ciphertext b = encryptor.encrypt(enc.encode(std::vector<uint64_t>{5}));
  EXPECT_EQ(enc.decode(decryptor.decrypt(ev.mul_relin(a, b, keys_->rk)))[0], 15u);
}

TEST_F(BfvToy, ZeroVectorDecryptsToZeros) {
  BatchEncoder enc(ctx_);
  Encryptor encryptor(ctx_, keys_->pk);
  Decryptor decryptor(ctx_, keys_->sk);
  const FieldVector out = enc.decode(
      decryptor.decrypt(encryptor.encrypt(enc.encode(FieldVector(16)))));
  for (size_t i = 0; i < out.size(); ++i) ASSERT_EQ(out[i], 0u);
}

TEST_F(BfvToy, EncryptionIsRandomized) {
  BatchEncoder enc(ctx_);
  Encryptor encryptor(ctx_, keys_->pk);
  const Plaintext m = enc.encode(std::vector<uint64_t>{7, 7, 7});
  EXPECT_NE(encryptor.encrypt(m).serialize(), encryptor.encrypt(m).serialize());
}

TEST_F(BfvToy, DecryptIsDeterministic) {
  BatchEncoder enc(ctx_);
  Encryptor encryptor(ctx_, keys_->pk);
  Decryptor decryptor(ctx_, keys_->sk);
  const Ciphertext c = encryptor.encrypt(enc.encode(std::vector<uint64_t>{9, 8}));
  EXPECT_EQ(decryptor.decrypt(c).coeffs, decryptor.decrypt(c).coeffs);
}

TEST_F(BfvToy, EncoderRejectsBadInputs) {
  BatchEncoder enc(ctx_);
  std::vector<uint64_t> too_many(ctx_->slot_count() + 1, 0);
  try {
    enc.encode(too_many);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooManySlots);
  }
  try {
    enc.encode(std::vector<uint64_t>{kPlainModulus});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSlotOverflow);
  }
}

TEST_F(BfvToy, EncodedSlotsMultiplyLikeFieldVectors) {
  BatchEncoder enc(ctx_);
  Evaluator ev(ctx_);
  Encryptor encryptor(ctx_, keys_->pk);
  Decryptor decryptor(ctx_, keys_->sk);
  Prng rng(seed_of(13));
  FieldVector a(ctx_->slot_count()), b(ctx_->slot_count());
  for (size_t i = 0; i < a.size(); ++i) {
    a.set(i, int64_t(rng.uniform(kPlainModulus)));
    b.set(i, int64_t(rng.uniform(kPlainModulus)));
  }
  const Ciphertext c = ev.mul_plain(encryptor.encrypt(enc.encode(a), rng), enc.encode(b));
  EXPECT_EQ(enc.decode(decryptor.decrypt(c)), vec_op(a, b, VecOp::kMul));
}

// 100 random trials per operation against a slotwise oracle.
TEST_F(BfvToy, HomomorphismProperty) {
  BatchEncoder enc(ctx_);
  Encryptor encryptor(ctx_, keys_->pk);
  Decryptor decryptor(ctx_, keys_->sk);
  Evaluator ev(ctx_);
  Prng rng(seed_of(14));
  const size_t slots = ctx_->slot_count();
  const size_t row = ctx_->row_size();
  const int64_t steps[] = {1, -1, 2, 5};
  const uint64_t t = kPlainModulus;
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_slots(rng, slots);
    const auto b = random_slots(rng, slots);
    const Ciphertext ca = encryptor.encrypt(enc.encode(a), rng);
    const Ciphertext cb = encryptor.encrypt(enc.encode(b), rng);
    const FieldVector sum = enc.decode(decryptor.decrypt(ev.add(ca, cb)));
    const FieldVector diff = enc.decode(decryptor.decrypt(ev.sub(ca, cb)));
    const FieldVector pm =
        enc.decode(decryptor.decrypt(ev.mul_plain(ca, enc.encode(b))));
    const FieldVector cm =
        enc.decode(decryptor.decrypt(ev.mul_relin(ca, cb, keys_->rk)));
    const int64_t step = steps[trial % 4];
    const FieldVector rot =
        enc.decode(decryptor.decrypt(ev.rotate_rows(ca, step, keys_->gk)));
    const FieldVector swapped =
        enc.decode(decryptor.decrypt(ev.swap_rows(ca, keys_->gk)));
    for (size_t i = 0; i < slots; ++i) {
      ASSERT_EQ(sum[i], (a[i] + b[i]) % t);
      ASSERT_EQ(diff[i], (a[i] + t - b[i]) % t);
      ASSERT_EQ(pm[i], a[i] * b[i] % t);
      ASSERT_EQ(cm[i], a[i] * b[i] % t);
      const size_t r = i / row, j = i % row;
      const size_t src = r * row + size_t((int64_t(j) + step + int64_t(row)) % int64_t(row));
      ASSERT_EQ(rot[i], a[src]) << "step " << step << " slot " << i;
      ASSERT_EQ(swapped[i], a[(1 - r) * row + j]);
    }
  }
}

TEST_F(BfvToy, HoistedRotationsMatchSingleRotations) {
  BatchEncoder enc(ctx_);
  Encryptor encryptor(ctx_, keys_->pk);
  Decryptor decryptor(ctx_, keys_->sk);
  Evaluator ev(ctx_);
  Prng rng(seed_of(15));
  const Ciphertext c = encryptor.encrypt(enc.encode(random_slots(rng, 64)), rng);
  const std::vector<int64_t> steps = {1, -1, 2, 5};
  const auto many = ev.rotate_many(c, steps, keys_->gk);
  for (size_t i = 0; i < steps.size(); ++i) {
    EXPECT_EQ(decryptor.decrypt(many[i]).coeffs,
              decryptor.decrypt(ev.rotate_rows(c, steps[i], keys_->gk)).coeffs);
  }
}

TEST_F(BfvToy, MissingRotationKeyIsReported) {
  BatchEncoder enc(ctx_);
  Encryptor encryptor(ctx_, keys_->pk);
  Evaluator ev(ctx_);
  const Ciphertext c = encryptor.encrypt(enc.encode(std::vector<uint64_t>{1}));
  try {
    ev.rotate_rows(c, 3, keys_->gk);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingEvalKey);
  }
  EXPECT_THROW(ev.relinearize(ev.multiply(c, c), RelinKey{}), Error);
}

TEST_F(BfvToy, SerializationRoundTripsAndChecksParameters) {
  BatchEncoder enc(ctx_);
  Encryptor encryptor(ctx_, keys_->pk);
  Decryptor decryptor(ctx_, keys_->sk);
  Prng rng(seed_of(16));
  const auto v = random_slots(rng, 32);
  const Ciphertext c = encryptor.encrypt(enc.encode(v), rng);
  const Bytes bytes = c.serialize();
  EXPECT_EQ(bytes.size(), c.serialized_size());
  // version | kind | params id | size | ntt flag | words
  EXPECT_EQ(bytes.size(), 12 + 8 * 2 * ctx_->q_size() * ctx_->n());
  const Ciphertext back = Ciphertext::deserialize(*ctx_, bytes);
  EXPECT_EQ(decryptor.decrypt(back).coeffs, decryptor.decrypt(c).coeffs);

  const SecretKey sk = SecretKey::deserialize(*ctx_, keys_->sk.serialize());
  EXPECT_EQ(Decryptor(ctx_, sk).decrypt(c).coeffs, decryptor.decrypt(c).coeffs);
  const PublicKey pk = PublicKey::deserialize(*ctx_, keys_->pk.serialize());
  EXPECT_EQ(enc.decode(decryptor.decrypt(Encryptor(ctx_, pk).encrypt(enc.encode(v)))),
            enc.decode(enc.encode(v)));
  const RelinKey rk = RelinKey::deserialize(*ctx_, keys_->rk.serialize());
  EXPECT_EQ(rk.key.data, keys_->rk.key.data);
  const GaloisKeys gk = GaloisKeys::deserialize(*ctx_, keys_->gk.serialize());
  EXPECT_EQ(gk.keys.size(), keys_->gk.keys.size());

  auto micro = BfvContext::create(BfvParams::from_preset(Preset::kMicro));
  try {
    Ciphertext::deserialize(*micro, bytes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParamMismatch);
  }
  Bytes truncated(bytes.begin(), bytes.begin() + 100);
  try {
    Ciphertext::deserialize(*ctx_, truncated);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
  }
}

TEST_F(BfvToy, MixingParameterSetsIsRejected) {
  auto micro = BfvContext::create(BfvParams::from_preset(Preset::kMicro));
  Prng rng(seed_of(17));
  const KeySet other = he_keygen(micro, rng, {1});
  const Ciphertext foreign =
      Encryptor(micro, other.pk).encrypt(BatchEncoder(micro).encode(FieldVector(1)));
  const Ciphertext local =
      Encryptor(ctx_, keys_->pk).encrypt(BatchEncoder(ctx_).encode(FieldVector(1)));
  try {
    Evaluator(ctx_).add(local, foreign);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParamMismatch);
  }
}

TEST(BfvKeygen, ToyKeygenFitsTimeBudget) {
  // Budget pinned at 5 s for the toy ring, key set of the HHE layout size.
  const auto start = std::chrono::steady_clock::now();
  auto ctx = BfvContext::create(BfvParams::from_preset(Preset::kToy));
  Prng rng(seed_of(18));
  const KeySet keys = he_keygen(ctx, rng);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_LT(seconds, 5.0);
  EXPECT_TRUE(keys.gk.has(ctx->galois_for_step(1)));
}

TEST(BfvParamsTest, PresetsAreWellFormed) {
  for (Preset p : {Preset::kMicro, Preset::kToy, Preset::kDefault}) {
    const BfvParams params = BfvParams::from_preset(p);
    EXPECT_EQ(params.plain_modulus % (2 * params.n), 1u);
    EXPECT_GE(params.supported_depth(), 4);
    for (uint64_t q : params.q) EXPECT_EQ(q % (2 * params.n), 1u);
  }
  EXPECT_EQ(BfvParams::from_preset(Preset::kToy).n, 4096u);
  EXPECT_EQ(BfvParams::from_preset(Preset::kDefault).n, 16384u);
  EXPECT_THROW(parse_preset("huge"), Error);
  EXPECT_NE(BfvParams::from_preset(Preset::kToy).id(),
            BfvParams::from_preset(Preset::kDefault).id());
}

// Squares until decryption refuses: every level that still decrypts must be
// exact, the budget never rises, and the end is NoiseOverflow.
void drive_depth_to_failure(Preset preset, int* levels_out,
                            std::vector<int>* budgets_out) {
  auto ctx = BfvContext::create(BfvParams::from_preset(preset));
  Prng rng(seed_of(19));
  KeyGenerator gen(ctx, Prng(seed_of(20)));
  const PublicKey pk = gen.create_public_key();
  const RelinKey rk = gen.create_relin_key();
  BatchEncoder enc(ctx);
  Encryptor encryptor(ctx, pk);
  Decryptor decryptor(ctx, gen.secret_key());
  Evaluator ev(ctx);
  auto v = random_slots(rng, ctx->slot_count());
  Ciphertext c = encryptor.encrypt(enc.encode(v), rng);
  std::vector<int> budgets = {decryptor.noise_budget(c)};
  int levels = 0;
  for (;;) {
    c = ev.square_relin(c, rk);
    for (auto& x : v) x = x * x % kPlainModulus;
    const int budget = decryptor.noise_budget(c);
    ASSERT_LE(budget, budgets.back());
    budgets.push_back(budget);
    if (budget <= 0) {
      try {
        decryptor.decrypt(c);
        FAIL() << "decrypt succeeded with an exhausted budget";
      } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kNoiseOverflow);
      }
      break;
    }
    ++levels;
    const FieldVector out = enc.decode(decryptor.decrypt(c));
    for (size_t i = 0; i < v.size(); ++i) ASSERT_EQ(out[i], v[i]) << "level " << levels;
    ASSERT_LT(levels, 64);
  }
  *levels_out = levels;
  *budgets_out = budgets;
}

TEST(BfvDepth, MicroRunsOutWithNoiseOverflow) {
  int levels = 0;
  std::vector<int> budgets;
  drive_depth_to_failure(Preset::kMicro, &levels, &budgets);
  EXPECT_GE(levels, BfvParams::from_preset(Preset::kMicro).supported_depth());
}

TEST(BfvDepth, ToyBudgetFallsAtASteadyRate) {
  int levels = 0;
  std::vector<int> budgets;
  drive_depth_to_failure(Preset::kToy, &levels, &budgets);
  EXPECT_GE(levels, BfvParams::from_preset(Preset::kToy).supported_depth());
  // Levels 1..4 each cost about the same number of bits.
  std::vector<int> drops;
  for (size_t i = 2; i <= 4; ++i) drops.push_back(budgets[i - 1] - budgets[i]);
  const auto [lo, hi] = std::minmax_element(drops.begin(), drops.end());
  EXPECT_GT(*lo, 0);
  EXPECT_LE(*hi - *lo, 6);
}

// Four sequential ciphertext products on the largest preset stay exact.
TEST(BfvDepth, DefaultPresetFourSequentialProductsAreExact) {
  auto ctx = BfvContext::create(BfvParams::from_preset(Preset::kDefault));
  KeyGenerator gen(ctx, Prng(seed_of(21)));
  const PublicKey pk = gen.create_public_key();
  const RelinKey rk = gen.create_relin_key();
  BatchEncoder enc(ctx);
  Encryptor encryptor(ctx, pk);
  Decryptor decryptor(ctx, gen.secret_key());
  Evaluator ev(ctx);
  Prng rng(seed_of(22));
  auto acc = random_slots(rng, ctx->slot_count());
  Ciphertext c = encryptor.encrypt(enc.encode(acc), rng);
  int last = decryptor.noise_budget(c);
  for (int level = 1; level <= 4; ++level) {
    const auto f = random_slots(rng, ctx->slot_count());
    c = ev.mul_relin(c, encryptor.encrypt(enc.encode(f), rng), rk);
    for (size_t i = 0; i < acc.size(); ++i) acc[i] = acc[i] * f[i] % kPlainModulus;
    const FieldVector out = enc.decode(decryptor.decrypt(c));
    for (size_t i = 0; i < acc.size(); ++i) ASSERT_EQ(out[i], acc[i]);
    const int budget = decryptor.noise_budget(c);
    EXPECT_LT(budget, last);
    last = budget;
  }
  EXPECT_GT(last, 0);
}

}  // namespace
}  // namespace hheml::bfv
