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

#include <set>
#include <vector>

#include "hheml/bfv/encoder.h"
#include "hheml/bfv/encryptor.h"
#include "hheml/errors.h"
#include "hheml/hhe.h"

namespace hheml {
namespace {

Prng test_rng(uint8_t tag) {
  Seed s{};
  s[0] = tag;
  s[1] = 0x4e;
  return Prng(s);
}

FieldVector random_vector(Prng& rng, size_t len, uint64_t bound = kFieldModulus) {
  FieldVector v(len);
  for (size_t i = 0; i < len; ++i) v.set(i, int64_t(rng.uniform(bound)));
  return v;
}

ModelParams random_model(Prng& rng, size_t n_out, size_t dim, int64_t bound) {
  ModelParams m;
  m.n_out = n_out;
  m.dim = dim;
  for (size_t i = 0; i < n_out * dim; ++i) {
    m.w.push_back(int64_t(rng.uniform(2 * bound + 1)) - bound);
  }
  for (size_t k = 0; k < n_out; ++k) {
    m.b.push_back(int64_t(rng.uniform(2 * bound + 1)) - bound);
  }
  return m;
}

// Unbounded integer reference for w x + b, mapped to its centered residue
// (the identity whenever the result lies in the safe range).
std::vector<int64_t> linear_oracle(const ModelParams& m, const FieldVector& x) {
  std::vector<int64_t> out(m.n_out);
  for (size_t k = 0; k < m.n_out; ++k) {
    int64_t acc = m.b[k];
    for (size_t i = 0; i < m.dim; ++i) acc += m.weight(k, i) * int64_t(x[i]);
    out[k] = centered_lift(reduce(acc));
  }
  return out;
}

FieldVector all_slots(const HheContext& hc, const bfv::SecretKey& sk,
                      const bfv::Ciphertext& c) {
  bfv::Decryptor dec(hc.bfv(), sk);
  bfv::BatchEncoder enc(hc.bfv());
  return enc.decode(dec.decrypt(c));
}

HheParams micro_params(size_t max_inputs = 4, size_t max_outputs = 4) {
  HheParams p;
  p.preset = bfv::Preset::kMicro;
  p.cipher = CipherConfig{4, 2};
  p.max_inputs = max_inputs;
  p.max_outputs = max_outputs;
  return p;
}

TEST(HheLayout, DataSlotsSkipGapsAndStayInsideTheStride) {
  const HheContext hc(HheParams{});
  const uint32_t t = hc.cipher().t;
  std::set<size_t> used;
  for (size_t i = 0; i < hc.params().max_inputs; ++i) {
    const size_t s = hc.data_slot(i);
    EXPECT_NE(s % (t + 1), 0u) << "data landed on a gap slot";
    EXPECT_LT(s, hc.output_stride());
    EXPECT_TRUE(used.insert(s).second);
  }
  EXPECT_EQ(hc.output_stride() & (hc.output_stride() - 1), 0u);
}

TEST(HheLayout, RejectsLayoutsThatDoNotFit) {
  HheParams p = micro_params();
  p.max_inputs = 64;
  EXPECT_THROW(HheContext{p}, Error);
  p = micro_params();
  p.max_outputs = 8;
  EXPECT_THROW(HheContext{p}, Error);
}

TEST(HheLayout, RequiredStepsCoverTheCircuit) {
  const HheContext hc(HheParams{});
  const auto steps = hc.required_steps();
  const std::set<int64_t> s(steps.begin(), steps.end());
  // Baby steps, giant steps, wrap-around steps, the Feistel shift and the
  // output fold.
  for (int64_t k : {1, 2, 3, 4, 5, 6, 7, 8, 16, 24, -32, -24, -16, -8, -1,
                    32, 64, 128}) {
    EXPECT_TRUE(s.count(k)) << "missing step " << k;
  }
}

class HheMicro : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    hc_ = new HheContext(micro_params());
    Prng rng = test_rng(1);
    keys_ = new HheKeyBundle(hhe_keygen(*hc_, rng));
  }
  static void TearDownTestSuite() {
    delete keys_;
    delete hc_;
  }

  static HheContext* hc_;
  static HheKeyBundle* keys_;
};

HheContext* HheMicro::hc_ = nullptr;
HheKeyBundle* HheMicro::keys_ = nullptr;

TEST_F(HheMicro, DecompIsExactAndLeavesOtherSlotsZero) {
  Prng rng = test_rng(2);
  for (int trial = 0; trial < 40; ++trial) {
    const size_t len = 1 + rng.uniform(4);
    const FieldVector x = random_vector(rng, len);
    const HheCiphertexts up = hhe_enc(*hc_, keys_->pk, x, rng);
    const bfv::Ciphertext c = hhe_decomp(*hc_, keys_->evk, up.sym, up.key);
    const FieldVector slots = all_slots(*hc_, keys_->sk, c);
    std::vector<FieldElem> expected(slots.size(), 0);
    for (size_t i = 0; i < len; ++i) expected[hc_->data_slot(i)] = x[i];
    ASSERT_EQ(std::vector<FieldElem>(slots.elems().begin(), slots.elems().end()),
              expected)
        << "trial " << trial;
  }
}

TEST_F(HheMicro, SessionReusesOneEncryptedKeyAcrossInputs) {
  Prng rng = test_rng(3);
  HheUserSession session(*hc_, keys_->pk, Prng(test_rng(4)));
  for (int i = 0; i < 5; ++i) {
    const FieldVector x = random_vector(rng, 4);
    const SymCiphertext sym = session.encrypt(x);
    const bfv::Ciphertext c =
        hhe_decomp(*hc_, keys_->evk, sym, session.encrypted_key());
    EXPECT_EQ(hhe_dec_data(*hc_, keys_->sk, c, 4), x);
  }
}

TEST_F(HheMicro, PlainModelEvalMatchesIntegerOracle) {
  Prng rng = test_rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const size_t n_out = 1 + rng.uniform(4);
    const ModelParams m = random_model(rng, n_out, 4, kParamMax);
    const FieldVector x = random_vector(rng, 4, 16);
    const HheCiphertexts up = hhe_enc(*hc_, keys_->pk, x, rng);
    const bfv::Ciphertext cx = hhe_decomp(*hc_, keys_->evk, up.sym, up.key);
    const bfv::Ciphertext res = hhe_eval_linear(*hc_, keys_->evk, m, cx);
    EXPECT_EQ(hhe_dec(*hc_, keys_->sk, res, n_out), linear_oracle(m, x));
    // Only the output slots carry data.
    const FieldVector slots = all_slots(*hc_, keys_->sk, res);
    for (size_t s = 0; s < slots.size(); ++s) {
      if (s % hc_->output_stride() == 0 && s / hc_->output_stride() < n_out &&
          s < hc_->bfv()->row_size()) {
        continue;
      }
      ASSERT_EQ(slots[s], 0u) << "slot " << s;
    }
  }
}

TEST_F(HheMicro, EncryptedModelEvalMatchesIntegerOracle) {
  Prng rng = test_rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const size_t n_out = 1 + rng.uniform(4);
    const ModelParams m = random_model(rng, n_out, 4, kParamMax);
    const FieldVector x = random_vector(rng, 4, 16);
    const HheCiphertexts up = hhe_enc(*hc_, keys_->pk, x, rng);
    const bfv::Ciphertext cx = hhe_decomp(*hc_, keys_->evk, up.sym, up.key);
    const EncryptedModel em = encrypt_model(*hc_, keys_->pk, m, rng);
    const bfv::Ciphertext res = hhe_eval_linear(*hc_, keys_->evk, em, cx);
    EXPECT_EQ(hhe_dec(*hc_, keys_->sk, res, n_out), linear_oracle(m, x));
  }
}

TEST_F(HheMicro, ZeroInputYieldsBias) {
  Prng rng = test_rng(7);
  const ModelParams m = random_model(rng, 2, 4, kParamMax);
  const HheCiphertexts up = hhe_enc(*hc_, keys_->pk, FieldVector(4), rng);
  const bfv::Ciphertext cx = hhe_decomp(*hc_, keys_->evk, up.sym, up.key);
  EXPECT_EQ(hhe_dec(*hc_, keys_->sk, hhe_eval_linear(*hc_, keys_->evk, m, cx), 2),
            m.b);
}

TEST_F(HheMicro, BatchFanOutPreservesOrder) {
  Prng rng = test_rng(8);
  HheUserSession session(*hc_, keys_->pk, Prng(test_rng(9)));
  std::vector<FieldVector> xs;
  std::vector<SymCiphertext> cs;
  for (int i = 0; i < 6; ++i) {
    xs.push_back(random_vector(rng, 4));
    cs.push_back(session.encrypt(xs.back()));
  }
  const auto out =
      hhe_decomp_batch(*hc_, keys_->evk, cs, session.encrypted_key(), 3);
  ASSERT_EQ(out.size(), xs.size());
  for (size_t i = 0; i < xs.size(); ++i) {
    EXPECT_EQ(hhe_dec_data(*hc_, keys_->sk, out[i], 4), xs[i]);
  }
}

TEST_F(HheMicro, SerializedKeysAndCiphertextsRoundTrip) {
  Prng rng = test_rng(10);
  const auto& ctx = *hc_->bfv();
  const EvalKeys evk = EvalKeys::deserialize(ctx, keys_->evk.serialize());
  const FieldVector x = random_vector(rng, 3);
  const HheCiphertexts up = hhe_enc(*hc_, keys_->pk, x, rng);
  const EncryptedKey ck = EncryptedKey::deserialize(ctx, up.key.serialize());
  const SymCiphertext sym = SymCiphertext::deserialize(up.sym.serialize());
  const bfv::Ciphertext c = hhe_decomp(*hc_, evk, sym, ck);
  EXPECT_EQ(hhe_dec_data(*hc_, keys_->sk, c, 3), x);

  const ModelParams m = random_model(rng, 1, 4, 100);
  const EncryptedModel em = EncryptedModel::deserialize(
      ctx, encrypt_model(*hc_, keys_->pk, m, rng).serialize());
  EXPECT_EQ(em.n_out, 1u);
  EXPECT_EQ(em.dim, 4u);
}

TEST_F(HheMicro, ErrorsAreReportedWithTheirCodes) {
  Prng rng = test_rng(11);
  const HheCiphertexts up = hhe_enc(*hc_, keys_->pk, random_vector(rng, 4), rng);
  auto code_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kUsage;
  };
  EXPECT_EQ(code_of([&] { hhe_enc(*hc_, keys_->pk, FieldVector(5), rng); }),
            ErrorCode::kLayoutMismatch);
  EXPECT_EQ(code_of([&] { hhe_decomp(*hc_, EvalKeys{}, up.sym, up.key); }),
            ErrorCode::kMissingEvalKey);
  EvalKeys no_rotations{keys_->evk.rk, {}};
  no_rotations.gk.params_id = keys_->evk.rk.params_id;
  EXPECT_EQ(code_of([&] { hhe_decomp(*hc_, no_rotations, up.sym, up.key); }),
            ErrorCode::kMissingEvalKey);

  HheParams toy;
  toy.max_inputs = 4;
  const HheContext other(toy);
  Prng other_rng = test_rng(12);
  const HheKeyBundle other_keys = hhe_keygen(other, other_rng);
  EXPECT_EQ(code_of([&] { hhe_decomp(*hc_, keys_->evk, up.sym,
                                     hhe_enc(other, other_keys.pk,
                                             FieldVector(4), rng).key); }),
            ErrorCode::kParamMismatch);
  EXPECT_EQ(code_of([&] { hhe_dec(*hc_, keys_->sk, up.key.cts[0], 5); }),
            ErrorCode::kLayoutMismatch);
  ModelParams wide = random_model(rng, 1, 5, 10);
  const bfv::Ciphertext cx = hhe_decomp(*hc_, keys_->evk, up.sym, up.key);
  EXPECT_EQ(code_of([&] { hhe_eval_linear(*hc_, keys_->evk, wide, cx); }),
            ErrorCode::kLayoutMismatch);
}

// Full-size cipher on the toy ring: one wide input spanning four keystream
// blocks and one short input.
TEST(HheToy, FullCipherDecompIsExact) {
  HheParams p;
  p.max_inputs = 128;
  const HheContext hc(p);
  Prng rng = test_rng(20);
  const HheKeyBundle keys = hhe_keygen(hc, rng);
  for (size_t len : {size_t{128}, size_t{4}}) {
    const FieldVector x = random_vector(rng, len);
    const HheCiphertexts up = hhe_enc(hc, keys.pk, x, rng);
    const bfv::Ciphertext c = hhe_decomp(hc, keys.evk, up.sym, up.key);
    EXPECT_EQ(hhe_dec_data(hc, keys.sk, c, len), x);
    bfv::Decryptor dec(hc.bfv(), keys.sk);
    // Room left for the linear layer, plaintext or encrypted.
    EXPECT_GT(dec.noise_budget(c), 40);
  }
}

}  // namespace
}  // namespace hheml
