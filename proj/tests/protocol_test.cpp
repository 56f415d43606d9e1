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

#include <algorithm>
#include <vector>

#include "hheml/errors.h"
#include "hheml/protocol.h"

namespace hheml {
namespace {

Seed seed_of(uint8_t tag) {
  Seed s{};
  s[0] = tag;
  s[1] = 0x9c;
  return s;
}

ProtocolConfig micro_config(uint8_t tag) {
  ProtocolConfig cfg;
  cfg.preset = bfv::Preset::kMicro;
  cfg.cipher = CipherConfig{4, 2};
  cfg.seed = seed_of(tag);
  return cfg;
}

// Unbounded integer reference.
std::vector<int64_t> oracle(const ModelParams& m, const FieldVector& x) {
  std::vector<int64_t> out(m.n_out);
  for (size_t k = 0; k < m.n_out; ++k) {
    int64_t acc = m.b[k];
    for (size_t i = 0; i < m.dim; ++i) acc += m.weight(k, i) * int64_t(x[i]);
    out[k] = acc;
  }
  return out;
}

bool in_range(const ModelParams& m, const FieldVector& x) {
  for (int64_t v : oracle(m, x)) {
    if (v < kSafeResultMin || v > kSafeResultMax) return false;
  }
  return true;
}

ModelParams random_model(Prng& rng, size_t n_out, size_t dim) {
  ModelParams m;
  m.n_out = n_out;
  m.dim = dim;
  const uint64_t span = uint64_t(kParamMax - kParamMin + 1);
  for (size_t i = 0; i < n_out * dim; ++i) m.w.push_back(kParamMin + int64_t(rng.uniform(span)));
  for (size_t k = 0; k < n_out; ++k) m.b.push_back(kParamMin + int64_t(rng.uniform(span)));
  return m;
}

// 4-bit inputs, redrawn until every logit is representable.
FieldVector random_input(Prng& rng, const ModelParams& m) {
  for (;;) {
    FieldVector x(m.dim);
    for (size_t i = 0; i < m.dim; ++i) x.set(i, int64_t(rng.uniform(16)));
    if (in_range(m, x)) return x;
  }
}

std::vector<MsgType> types_of(const Transcript& t) {
  std::vector<MsgType> out;
  for (const auto& e : t.entries) out.push_back(e.meta.type);
  return out;
}

struct TwoParty {
  ModelParams model;
  std::vector<FieldVector> inputs;
  ProtocolConfig cfg;
};

TwoParty two_party_fixture(uint8_t tag, size_t n_inputs = 3) {
  Prng rng(seed_of(tag + 100));
  TwoParty f;
  f.model = random_model(rng, 2, 4);
  for (size_t i = 0; i < n_inputs; ++i) f.inputs.push_back(random_input(rng, f.model));
  f.cfg = micro_config(tag);
  return f;
}

TEST(TwoParty, HonestRunMatchesOracle) {
  const TwoParty f = two_party_fixture(1);
  Transcript t;
  const ProtocolResults res = run_2gml(f.cfg, f.inputs, f.model, &t);
  ASSERT_EQ(res.size(), 1u);
  ASSERT_EQ(res[0].size(), f.inputs.size());
  for (size_t i = 0; i < f.inputs.size(); ++i) EXPECT_EQ(res[0][i], oracle(f.model, f.inputs[i]));
  EXPECT_TRUE(t.completed);
  EXPECT_FALSE(t.abort);
}

TEST(TwoParty, MessageSequenceIsM1M2M3) {
  const TwoParty f = two_party_fixture(2);
  Transcript t;
  run_2gml(f.cfg, f.inputs, f.model, &t);
  EXPECT_EQ(types_of(t),
            (std::vector<MsgType>{MsgType::kM1, MsgType::kM2, MsgType::kM3TwoParty}));
  EXPECT_EQ(t.entries[0].meta.from, PartyId::user(0));
  EXPECT_EQ(t.entries[0].meta.to, PartyId::csp());
  EXPECT_EQ(t.entries[1].meta.to, PartyId::csp());
  EXPECT_EQ(t.entries[2].meta.from, PartyId::csp());
  EXPECT_EQ(t.entries[2].meta.to, PartyId::user(0));
  for (const auto& e : t.entries) EXPECT_EQ(e.action, "deliver");
  // m1 carries the wrapped evaluation keys: larger than m2 and m3.
  EXPECT_GT(t.entries[0].payload_bytes, t.entries[1].payload_bytes);
}

TEST(TwoParty, RunIsDeterministicAndEmptyScriptIsHonest) {
  const TwoParty f = two_party_fixture(3);
  const ProtocolSession base = ProtocolSession::two_party(f.cfg, f.inputs, f.model);
  ProtocolSession a = base;
  ProtocolSession b = base;
  const Transcript ta = a.run();
  const Transcript tb = adversary_script(b, {});
  EXPECT_TRUE(ta.same_run(tb));
  Transcript tc;
  run_2gml(f.cfg, f.inputs, f.model, &tc);
  EXPECT_TRUE(ta.same_run(tc));
  EXPECT_EQ(ta.wires, tc.wires);
}

TEST(TwoParty, TcpTransportCarriesIdenticalBytes) {
  const TwoParty f = two_party_fixture(4, 1);
  ProtocolConfig tcp = f.cfg;
  tcp.transport = TransportKind::kTcp;
  Transcript sim_t, tcp_t;
  run_2gml(f.cfg, f.inputs, f.model, &sim_t);
  run_2gml(tcp, f.inputs, f.model, &tcp_t);
  EXPECT_TRUE(sim_t.same_run(tcp_t));
}

// Replace c_x inside m2 with the adversary's own symmetric ciphertext.
Bytes substitute_cx(const Bytes& wire, bool resign, Prng& rng) {
  Envelope e = Envelope::parse(wire);
  ByteReader r(e.payload);
  const uint32_t n = r.u32();
  ByteWriter w;
  w.u32(n);
  for (uint32_t i = 0; i < n; ++i) {
    SymCiphertext c = SymCiphertext::deserialize(r.blob());
    for (size_t j = 0; j < c.body.size(); ++j) c.body.set(j, int64_t(rng.uniform(kFieldModulus)));
    w.blob(c.serialize());
  }
  w.raw(r.raw(r.remaining()));
  Bytes payload = w.take();
  if (resign) {
    const SigningKey adversary = SigningKey::generate(rng);
    e = seal(adversary, e.type, payload, e.timestamp);
  } else {
    e.payload = std::move(payload);
  }
  return e.serialize();
}

TEST(TwoParty, SubstitutedCiphertextInM2Aborts) {
  const TwoParty f = two_party_fixture(5, 1);
  for (bool resign : {false, true}) {
    Prng adv(seed_of(55));
    const Transcript t = adversary_script(
        ProtocolSession::two_party(f.cfg, f.inputs, f.model),
        {InterceptAction::rewrite_with(
            1, [&](const Bytes& w) { return substitute_cx(w, resign, adv); })});
    ASSERT_TRUE(t.abort);
    EXPECT_FALSE(t.completed);
    EXPECT_EQ(t.abort->party, PartyId::csp());
    EXPECT_EQ(t.abort->phase, Phase::kUpload);
    EXPECT_EQ(t.abort->cause, ErrorCode::kSignatureInvalid);
    EXPECT_EQ(t.entries.size(), 2u);
  }
}

TEST(TwoParty, DroppedM3EndsInTimeout) {
  const TwoParty f = two_party_fixture(6, 1);
  const Transcript t = adversary_script(
      ProtocolSession::two_party(f.cfg, f.inputs, f.model), {InterceptAction::drop(2)});
  ASSERT_TRUE(t.abort);
  EXPECT_EQ(t.abort->party, PartyId::user(0));
  EXPECT_EQ(t.abort->phase, Phase::kEval);
  EXPECT_EQ(t.abort->cause, ErrorCode::kTimeout);
  EXPECT_EQ(t.abort->at, t.entries[1].sent_at + f.cfg.receive_timeout);
  EXPECT_EQ(t.entries[2].action, "drop");
}

TEST(TwoParty, DelayWithinTimeoutIsTolerated) {
  const TwoParty f = two_party_fixture(7, 1);
  const Transcript ok = adversary_script(
      ProtocolSession::two_party(f.cfg, f.inputs, f.model), {InterceptAction::delay(2, 20)});
  EXPECT_TRUE(ok.completed);
  const Transcript late = adversary_script(
      ProtocolSession::two_party(f.cfg, f.inputs, f.model), {InterceptAction::delay(2, 45)});
  ASSERT_TRUE(late.abort);
  EXPECT_EQ(late.abort->cause, ErrorCode::kTimeout);
}

// A captured envelope injected into a later run verifies but is stale.
TEST(TwoParty, ReplayBeyondFreshnessWindowAborts) {
  const TwoParty f = two_party_fixture(8, 1);
  Transcript old_run;
  run_2gml(f.cfg, f.inputs, f.model, &old_run);
  ProtocolConfig later = f.cfg;
  later.start_time += 61 + 10;
  for (size_t msg = 0; msg < 3; ++msg) {
    const Transcript t = adversary_script(
        ProtocolSession::two_party(later, f.inputs, f.model),
        {InterceptAction::replace(msg, old_run.wires[msg])});
    ASSERT_TRUE(t.abort) << "message " << msg;
    EXPECT_EQ(t.abort->cause, ErrorCode::kStaleMessage);
    EXPECT_EQ(t.abort->party, t.entries[msg].meta.to);
  }
}

TEST(TwoParty, FlippedTypeByteIsRejected) {
  const TwoParty f = two_party_fixture(9, 1);
  const Transcript t =
      adversary_script(ProtocolSession::two_party(f.cfg, f.inputs, f.model),
                       {InterceptAction::flip(1, 1, uint8_t(2 ^ 3))});
  ASSERT_TRUE(t.abort);
  EXPECT_EQ(t.abort->party, PartyId::csp());
  EXPECT_EQ(t.abort->cause, ErrorCode::kMalformed);
}

TEST(TwoParty, RunThrowsProtocolAbortWithCause) {
  const TwoParty f = two_party_fixture(10, 1);
  ProtocolConfig cfg = f.cfg;
  cfg.receive_timeout = 0;
  try {
    run_2gml(cfg, f.inputs, f.model);
    FAIL() << "expected an abort";
  } catch (const ProtocolAbort& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProtocolAbort);
    EXPECT_EQ(e.info().cause, ErrorCode::kTimeout);
  }
}

TEST(TwoParty, InputShapeIsChecked) {
  const TwoParty f = two_party_fixture(11, 1);
  std::vector<FieldVector> bad = {FieldVector(3)};
  EXPECT_THROW(run_2gml(f.cfg, bad, f.model), Error);
}

struct ThreeParty {
  ModelParams model;
  std::vector<std::vector<FieldVector>> users;
  ProtocolConfig cfg;
};

ThreeParty three_party_fixture(uint8_t tag, size_t n_users, size_t per_user) {
  Prng rng(seed_of(tag + 100));
  ThreeParty f;
  f.model = random_model(rng, 1, 4);
  f.users.resize(n_users);
  for (auto& xs : f.users) {
    for (size_t i = 0; i < per_user; ++i) xs.push_back(random_input(rng, f.model));
  }
  f.cfg = micro_config(tag);
  return f;
}

TEST(ThreeParty, ThreeUsersMatchOracle) {
  const ThreeParty f = three_party_fixture(20, 3, 2);
  Transcript t;
  const ProtocolResults res = run_3gml(f.cfg, f.users, f.model, &t);
  ASSERT_EQ(res.size(), 3u);
  for (size_t u = 0; u < 3; ++u) {
    ASSERT_EQ(res[u].size(), 2u);
    for (size_t i = 0; i < 2; ++i) EXPECT_EQ(res[u][i], oracle(f.model, f.users[u][i]));
  }
  EXPECT_EQ(types_of(t),
            (std::vector<MsgType>{MsgType::kM1, MsgType::kM2, MsgType::kM2, MsgType::kM2,
                                  MsgType::kM3ThreeParty, MsgType::kM4}));
  EXPECT_EQ(t.entries[0].meta.from, PartyId::analyst());
  EXPECT_EQ(t.entries[2].meta.from, PartyId::user(1));
  EXPECT_EQ(t.entries[5].meta.to, PartyId::analyst());
}

TEST(ThreeParty, ZeroInputGivesBias) {
  ThreeParty f = three_party_fixture(21, 1, 1);
  f.users[0][0] = FieldVector(4);
  const ProtocolResults res = run_3gml(f.cfg, f.users, f.model);
  EXPECT_EQ(res[0][0], f.model.b);
}

TEST(ThreeParty, TamperedM4AbortsAtAnalyst) {
  const ThreeParty f = three_party_fixture(22, 1, 1);
  for (size_t byte : {size_t{20}, size_t{400}}) {
    const Transcript t = adversary_script(
        ProtocolSession::three_party(f.cfg, f.users, f.model), {InterceptAction::flip(3, byte)});
    ASSERT_TRUE(t.abort);
    EXPECT_EQ(t.abort->party, PartyId::analyst());
    EXPECT_EQ(t.abort->cause, ErrorCode::kSignatureInvalid);
  }
}

// The analyst started waiting first, so its receive timeout fires first.
TEST(ThreeParty, DroppedUploadEndsInTimeout) {
  const ThreeParty f = three_party_fixture(23, 2, 1);
  const Transcript t = adversary_script(
      ProtocolSession::three_party(f.cfg, f.users, f.model), {InterceptAction::drop(2)});
  ASSERT_TRUE(t.abort);
  EXPECT_EQ(t.abort->party, PartyId::analyst());
  EXPECT_EQ(t.abort->phase, Phase::kEval);
  EXPECT_EQ(t.abort->cause, ErrorCode::kTimeout);
}

bool contains(const Bytes& hay, std::span<const uint8_t> needle) {
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

// The server's stored material never contains a secret key window, an input
// vector or the analyst's model.
TEST(ThreeParty, ServerHoldsNoTaintedValue) {
  const ThreeParty f = three_party_fixture(24, 2, 2);
  ProtocolSession s = ProtocolSession::three_party(f.cfg, f.users, f.model);
  ASSERT_TRUE(s.run().completed);
  const auto held = s.csp_inventory();
  const auto secrets = s.secret_inventory();
  ASSERT_FALSE(held.empty());
  size_t checked = 0;
  for (const auto& secret : secrets) {
    const Bytes& b = *secret.bytes;
    // Secret keys: several 32-byte windows of the coefficient data.
    std::vector<std::span<const uint8_t>> needles;
    if (secret.kind.starts_with("sk:")) {
      for (size_t at = 16; at + 32 <= b.size(); at += b.size() / 8) {
        needles.push_back(std::span(b).subspan(at, 32));
      }
    } else {
      needles.push_back(b);
    }
    for (const auto& item : held) {
      EXPECT_FALSE(item.kind.starts_with("sk"));
      for (auto needle : needles) {
        EXPECT_FALSE(contains(*item.bytes, needle))
            << secret.kind << " found in " << item.kind;
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 0u);
  // Sanity check for the scan itself: the server's own result is found.
  EXPECT_TRUE(contains(*held.back().bytes, std::span(*held.back().bytes).subspan(0, 16)));
}

TEST(ThreeParty, RejectsEmptyUserList) {
  const ThreeParty f = three_party_fixture(25, 1, 1);
  EXPECT_THROW(ProtocolSession::three_party(f.cfg, {}, f.model), Error);
}

// Sampled byte positions; the acceptance run sweeps every byte.
TEST(Tamper, SampledFlipsAbortAtReceiverTwoParty) {
  const TwoParty f = two_party_fixture(30, 1);
  const auto outcomes =
      tamper_sweep(ProtocolSession::two_party(f.cfg, f.inputs, f.model), 997);
  ASSERT_EQ(outcomes.size(), 3u);
  for (const auto& o : outcomes) {
    EXPECT_GT(o.positions, 0u);
    EXPECT_EQ(o.aborted, o.positions) << msg_type_name(o.type);
    EXPECT_EQ(o.aborted_at_receiver, o.positions);
    EXPECT_EQ(o.completed_wrong, 0u);
  }
}

TEST(Tamper, SampledFlipsAbortAtReceiverThreeParty) {
  const ThreeParty f = three_party_fixture(31, 1, 1);
  const auto outcomes =
      tamper_sweep(ProtocolSession::three_party(f.cfg, f.users, f.model), 997);
  ASSERT_EQ(outcomes.size(), 4u);
  for (const auto& o : outcomes) {
    EXPECT_EQ(o.aborted, o.positions) << msg_type_name(o.type);
    EXPECT_EQ(o.aborted_at_receiver, o.positions);
  }
}

TEST(Tamper, EnvelopeHeaderFlipsAllAbort) {
  const TwoParty f = two_party_fixture(32, 1);
  const ProtocolSession base = ProtocolSession::two_party(f.cfg, f.inputs, f.model);
  for (size_t msg = 0; msg < 3; ++msg) {
    for (size_t byte = 0; byte < 14; ++byte) {
      const Transcript t = adversary_script(base, {InterceptAction::flip(msg, byte, 0x80)});
      ASSERT_TRUE(t.abort) << "message " << msg << " byte " << byte;
    }
  }
}

}  // namespace
}  // namespace hheml
