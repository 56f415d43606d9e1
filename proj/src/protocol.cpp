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

#include "hheml/protocol.h"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <deque>
#include <set>
#include <thread>
#include <tuple>

#include "hheml/bfv/encoder.h"

namespace hheml {

std::string_view role_name(Role r) {
  switch (r) {
    case Role::kUser:
      return "user";
    case Role::kCsp:
      return "csp";
    case Role::kAnalyst:
      return "analyst";
  }
  return "?";
}

std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::kSetup:
      return "Setup";
    case Phase::kUpload:
      return "Upload";
    case Phase::kEval:
      return "Eval";
    case Phase::kClassify:
      return "Classify";
    case Phase::kDone:
      return "Done";
    case Phase::kAborted:
      return "Aborted";
  }
  return "?";
}

std::string party_name(PartyId p) {
  std::string s(role_name(p.role));
  if (p.role == Role::kUser) s += std::to_string(p.index);
  return s;
}

namespace {

std::string abort_message(const AbortInfo& a) {
  return party_name(a.party) + " aborted in " + std::string(phase_name(a.phase)) +
         " (" + std::string(error_code_name(a.cause)) + "): " + a.detail;
}

}  // namespace

ProtocolAbort::ProtocolAbort(AbortInfo info)
    : Error(ErrorCode::kProtocolAbort, abort_message(info)), info_(std::move(info)) {}

Pki Pki::generate(size_t n_users, Prng& rng) {
  Pki pki;
  for (size_t i = 0; i < n_users; ++i) pki.users.push_back(SigningKey::generate(rng));
  pki.csp = SigningKey::generate(rng);
  pki.analyst = SigningKey::generate(rng);
  pki.csp_wrap = WrapKey::generate(rng);
  return pki;
}

const SigningKey& Pki::signing_key(PartyId p) const {
  switch (p.role) {
    case Role::kUser:
      if (p.index >= users.size()) fail(ErrorCode::kConfigMismatch, "unknown user");
      return users[p.index];
    case Role::kCsp:
      return csp;
    case Role::kAnalyst:
      return analyst;
  }
  fail(ErrorCode::kConfigMismatch, "unknown role");
}

HheParams hhe_params_for(const ProtocolConfig& cfg, const ModelParams& model) {
  HheParams p;
  p.preset = cfg.preset;
  p.cipher = cfg.cipher;
  p.max_inputs = model.dim;
  p.max_outputs = model.n_out;
  return p;
}

InterceptAction InterceptAction::drop(size_t msg) {
  InterceptAction a;
  a.message_index = msg;
  a.kind = ActionKind::kDrop;
  return a;
}

InterceptAction InterceptAction::flip(size_t msg, size_t byte, uint8_t mask) {
  InterceptAction a;
  a.message_index = msg;
  a.kind = ActionKind::kFlipByte;
  a.byte = byte;
  a.mask = mask;
  return a;
}

InterceptAction InterceptAction::replace(size_t msg, Bytes wire) {
  InterceptAction a;
  a.message_index = msg;
  a.kind = ActionKind::kReplace;
  a.replacement = std::move(wire);
  return a;
}

InterceptAction InterceptAction::rewrite_with(size_t msg,
                                              std::function<Bytes(const Bytes&)> fn) {
  InterceptAction a;
  a.message_index = msg;
  a.kind = ActionKind::kRewrite;
  a.rewrite = std::move(fn);
  return a;
}

InterceptAction InterceptAction::delay(size_t msg, uint64_t seconds) {
  InterceptAction a;
  a.message_index = msg;
  a.kind = ActionKind::kDelay;
  a.delay_seconds = seconds;
  return a;
}

InterceptAction InterceptAction::duplicate(size_t msg) {
  InterceptAction a;
  a.message_index = msg;
  a.kind = ActionKind::kDuplicate;
  return a;
}

Bytes encode_upload(const std::vector<SymCiphertext>& cts, const EncryptedKey& key) {
  ByteWriter w;
  w.u32(uint32_t(cts.size()));
  for (const auto& c : cts) w.blob(c.serialize());
  w.blob(key.serialize());
  return w.take();
}

Bytes encode_ciphertexts(const std::vector<bfv::Ciphertext>& cts) {
  ByteWriter w;
  w.u32(uint32_t(cts.size()));
  for (const auto& c : cts) w.blob(c.serialize());
  return w.take();
}

bool Transcript::same_run(const Transcript& o) const {
  return entries == o.entries && abort == o.abort && completed == o.completed &&
         results == o.results;
}

double Transcript::phase_ms(Phase p) const {
  double ms = 0;
  for (const auto& t : timings) {
    if (t.phase == p) ms += t.wall_ms;
  }
  return ms;
}

size_t Transcript::bytes_of(MsgType t) const {
  size_t n = 0;
  for (const auto& e : entries) {
    if (e.meta.type == t) n += e.wire_bytes;
  }
  return n;
}

namespace {

using SteadyClock = std::chrono::steady_clock;

// ---- payload codecs --------------------------------------------------------

struct Upload {
  std::vector<SymCiphertext> cts;
  EncryptedKey key;
};

Upload decode_upload(const bfv::BfvContext& ctx, std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  Upload u;
  const uint32_t n = r.u32();
  if (n > r.remaining()) fail(ErrorCode::kParseError, "ciphertext count");
  for (uint32_t i = 0; i < n; ++i) u.cts.push_back(SymCiphertext::deserialize(r.blob()));
  u.key = EncryptedKey::deserialize(ctx, r.blob());
  r.expect_end();
  return u;
}

std::vector<bfv::Ciphertext> read_cts(const bfv::BfvContext& ctx, ByteReader& r) {
  const uint32_t n = r.u32();
  if (n > r.remaining()) fail(ErrorCode::kParseError, "ciphertext count");
  std::vector<bfv::Ciphertext> cts;
  for (uint32_t i = 0; i < n; ++i) cts.push_back(bfv::Ciphertext::deserialize(ctx, r.blob()));
  return cts;
}

// ---- loopback TCP link -----------------------------------------------------

// One connected socket pair on 127.0.0.1. carry() writes a length-prefixed
// frame on one end and reads it back from the other.
class TcpLink {
 public:
  TcpLink() {
    const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listener < 0) fail(ErrorCode::kIoError, "socket");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    socklen_t len = sizeof(addr);
    if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
        ::listen(listener, 1) != 0 ||
        ::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
      ::close(listener);
      fail(ErrorCode::kIoError, "loopback listen");
    }
    tx_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (tx_ < 0 || ::connect(tx_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      ::close(listener);
      fail(ErrorCode::kIoError, "loopback connect");
    }
    rx_ = ::accept(listener, nullptr, nullptr);
    ::close(listener);
    if (rx_ < 0) fail(ErrorCode::kIoError, "loopback accept");
    const int one = 1;
    ::setsockopt(tx_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  }
  ~TcpLink() {
    ::close(tx_);
    ::close(rx_);
  }
  TcpLink(const TcpLink&) = delete;
  TcpLink& operator=(const TcpLink&) = delete;

  Bytes carry(const Bytes& wire) {
    ByteWriter frame(wire.size() + 4);
    frame.u32(uint32_t(wire.size()));
    frame.raw(wire);
    const Bytes out = frame.take();
    bool write_ok = true;
    std::thread writer([&] { write_ok = write_all(out.data(), out.size()); });
    Bytes header(4);
    bool ok = read_all(header.data(), 4);
    Bytes body;
    if (ok) {
      ByteReader r(header);
      body.resize(r.u32());
      ok = read_all(body.data(), body.size());
    }
    writer.join();
    if (!ok || !write_ok) fail(ErrorCode::kIoError, "loopback transfer");
    return body;
  }

 private:
  bool write_all(const uint8_t* p, size_t n) {
    while (n > 0) {
      const ssize_t k = ::send(tx_, p, n, MSG_NOSIGNAL);
      if (k <= 0) return false;
      p += k;
      n -= size_t(k);
    }
    return true;
  }
  bool read_all(uint8_t* p, size_t n) {
    while (n > 0) {
      const ssize_t k = ::recv(rx_, p, n, 0);
      if (k <= 0) return false;
      p += k;
      n -= size_t(k);
    }
    return true;
  }

  int tx_ = -1;
  int rx_ = -1;
};

// ---- parties ---------------------------------------------------------------

struct PartyBase {
  Phase phase = Phase::kSetup;
  std::optional<uint64_t> deadline;
};

struct UserParty : PartyBase {
  uint32_t id = 0;
  std::shared_ptr<const std::vector<FieldVector>> inputs;
  std::shared_ptr<const HheKeyBundle> keys;  // two-party only
  Prng rng;
  std::vector<std::vector<int64_t>> results;
  explicit UserParty(Prng r) : rng(std::move(r)) {}
};

struct StoredUpload {
  std::shared_ptr<const Upload> upload;
};

struct CspParty : PartyBase {
  // Evaluation keys per key owner: each user in the two-party protocol, the
  // analyst in the three-party protocol.
  std::map<PartyId, std::shared_ptr<const EvalKeys>> evk_store;
  std::map<uint32_t, StoredUpload> uploads;
  std::shared_ptr<const EncryptedModel> model;
  std::vector<HeldItem> held;
};

struct AnalystParty : PartyBase {
  std::shared_ptr<const HheKeyBundle> keys;
  Prng rng;
  std::map<uint32_t, std::vector<std::vector<int64_t>>> results;
  explicit AnalystParty(Prng r) : rng(std::move(r)) {}
};

enum class Initiative : uint8_t { kUserSetup, kUserUpload, kAnalystSetup, kAnalystModel };

struct Pending {
  MessageMeta meta;
  uint64_t deliver_at = 0;
  uint64_t seq = 0;
  size_t entry = 0;
  Bytes wire;
};

}  // namespace

struct ProtocolSession::State {
  bool three_party = false;
  ProtocolConfig cfg;
  std::shared_ptr<const HheContext> hc;
  std::shared_ptr<const Pki> pki;
  std::shared_ptr<const ModelParams> model;
  std::vector<UserParty> users;
  CspParty csp;
  AnalystParty analyst{Prng(Seed{})};
  // Public board: the analyst's BFV public key once published.
  std::shared_ptr<const bfv::PublicKey> board_pk;

  uint64_t now = 0;
  uint64_t seq = 0;
  std::vector<Pending> pending;
  std::deque<std::pair<PartyId, Initiative>> initiatives;
  std::vector<InterceptAction> script;
  std::shared_ptr<TcpLink> tcp;
  Transcript transcript;
  bool done = false;

  PartyBase& party(PartyId p) {
    switch (p.role) {
      case Role::kUser:
        return users.at(p.index);
      case Role::kCsp:
        return csp;
      case Role::kAnalyst:
        return analyst;
    }
    return csp;
  }

  std::vector<PartyId> all_parties() const {
    std::vector<PartyId> out;
    for (const auto& u : users) out.push_back(PartyId::user(u.id));
    out.push_back(PartyId::csp());
    if (three_party) out.push_back(PartyId::analyst());
    return out;
  }

  template <class Fn>
  void timed(PartyId who, Phase phase, Fn&& fn) {
    const auto t0 = SteadyClock::now();
    fn();
    const double ms =
        std::chrono::duration<double, std::milli>(SteadyClock::now() - t0).count();
    for (auto& t : transcript.timings) {
      if (t.party == who && t.phase == phase) {
        t.wall_ms += ms;
        return;
      }
    }
    transcript.timings.push_back({who, phase, ms});
  }

  void hold(std::string kind, Bytes bytes) {
    csp.held.push_back({std::move(kind), std::make_shared<const Bytes>(std::move(bytes))});
  }

  // ---- transport ----

  static void apply_action(const InterceptAction& a, Bytes& wire, uint64_t& deliver_at,
                           size_t& copies, std::string& action) {
    auto note = [&action](const std::string& s) {
      if (!action.empty()) action += ",";
      action += s;
    };
    switch (a.kind) {
      case ActionKind::kDrop:
        copies = 0;
        note("drop");
        break;
      case ActionKind::kFlipByte:
        if (!wire.empty()) wire[a.byte % wire.size()] ^= a.mask;
        note("flip@" + std::to_string(a.byte));
        break;
      case ActionKind::kReplace:
        wire = a.replacement;
        note("replace");
        break;
      case ActionKind::kRewrite:
        wire = a.rewrite(wire);
        note("rewrite");
        break;
      case ActionKind::kDelay:
        deliver_at += a.delay_seconds;
        note("delay+" + std::to_string(a.delay_seconds));
        break;
      case ActionKind::kDuplicate:
        copies += 1;
        note("duplicate");
        break;
    }
  }

  void intercept_queued(const InterceptAction& a) {
    std::vector<Pending> out;
    for (auto& p : pending) {
      if (p.meta.index != a.message_index) {
        out.push_back(std::move(p));
        continue;
      }
      size_t copies = 1;
      std::string& action = transcript.entries[p.entry].action;
      if (action == "deliver") action.clear();
      apply_action(a, p.wire, p.deliver_at, copies, action);
      for (size_t c = 0; c < copies; ++c) {
        Pending q = p;
        q.seq = seq++;
        out.push_back(std::move(q));
      }
    }
    pending = std::move(out);
  }

  void send(PartyId from, PartyId to, const Envelope& e) {
    MessageMeta meta{transcript.entries.size(), e.type, from, to};
    Bytes wire = e.serialize();
    TranscriptEntry entry;
    entry.meta = meta;
    entry.sent_at = now;
    entry.wire_bytes = wire.size();
    entry.payload_bytes = e.payload.size();
    entry.wire_digest = sha256(wire);
    entry.action.clear();
    transcript.entries.push_back(entry);
    transcript.wires.push_back(wire);

    uint64_t deliver_at = now + cfg.hop_latency;
    size_t copies = 1;
    std::string action;
    for (const auto& a : script) {
      if (a.message_index == meta.index) apply_action(a, wire, deliver_at, copies, action);
    }
    transcript.entries.back().action = action.empty() ? "deliver" : action;
    for (size_t c = 0; c < copies; ++c) {
      pending.push_back({meta, deliver_at, seq++, meta.index, wire});
    }
  }

  void abort(PartyId who, ErrorCode cause, std::string detail) {
    PartyBase& p = party(who);
    transcript.abort = AbortInfo{who, p.phase, cause, std::move(detail), now};
    p.phase = Phase::kAborted;
    done = true;
  }

  // ---- initiatives ----

  void user_setup(UserParty& u) {
    const PartyId me = PartyId::user(u.id);
    timed(me, Phase::kSetup, [&] {
      u.keys = std::make_shared<const HheKeyBundle>(hhe_keygen(*hc, u.rng));
      const Bytes evk = u.keys->evk.serialize();
      send(me, PartyId::csp(),
           seal_wrapped(pki->signing_key(me), MsgType::kM1, evk,
                        pki->csp_wrap.public_key(), now, u.rng));
    });
    u.phase = Phase::kUpload;
  }

  void user_upload(UserParty& u) {
    const PartyId me = PartyId::user(u.id);
    const bfv::PublicKey* pk = three_party ? board_pk.get() : &u.keys->pk;
    if (pk == nullptr) fail(ErrorCode::kMissingEvalKey, "no published public key");
    u.phase = Phase::kUpload;
    timed(me, Phase::kUpload, [&] {
      HheUserSession session(*hc, *pk, u.rng.derive("upload"));
      std::vector<SymCiphertext> cts;
      for (const auto& x : *u.inputs) cts.push_back(session.encrypt(x));
      send(me, PartyId::csp(),
           seal(pki->signing_key(me), MsgType::kM2,
                encode_upload(cts, session.encrypted_key()), now));
    });
    if (three_party) {
      u.phase = Phase::kDone;
    } else {
      u.phase = Phase::kEval;
      u.deadline = now + cfg.receive_timeout;
    }
  }

  void analyst_setup() {
    const PartyId me = PartyId::analyst();
    timed(me, Phase::kSetup, [&] {
      analyst.keys = std::make_shared<const HheKeyBundle>(hhe_keygen(*hc, analyst.rng));
      board_pk = std::make_shared<const bfv::PublicKey>(analyst.keys->pk);
      const Bytes evk = analyst.keys->evk.serialize();
      send(me, PartyId::csp(),
           seal_wrapped(pki->analyst, MsgType::kM1, evk, pki->csp_wrap.public_key(),
                        now, analyst.rng));
    });
    analyst.phase = Phase::kUpload;
  }

  void analyst_model() {
    const PartyId me = PartyId::analyst();
    analyst.phase = Phase::kEval;
    timed(me, Phase::kEval, [&] {
      const EncryptedModel em = encrypt_model(*hc, analyst.keys->pk, *model, analyst.rng);
      send(me, PartyId::csp(),
           seal(pki->analyst, MsgType::kM3ThreeParty, em.serialize(), now));
    });
    analyst.deadline = now + cfg.receive_timeout;
  }

  void run_initiative(PartyId who, Initiative what) {
    try {
      switch (what) {
        case Initiative::kUserSetup:
          user_setup(users.at(who.index));
          break;
        case Initiative::kUserUpload:
          user_upload(users.at(who.index));
          break;
        case Initiative::kAnalystSetup:
          analyst_setup();
          break;
        case Initiative::kAnalystModel:
          analyst_model();
          break;
      }
    } catch (const Error& e) {
      abort(who, e.code(), e.what());
    }
  }

  // ---- receivers ----

  [[noreturn]] static void unexpected(const Envelope& e, PartyId from, Phase phase) {
    fail(ErrorCode::kMalformed, std::string("unexpected ") +
                                    std::string(msg_type_name(e.type)) + " from " +
                                    party_name(from) + " in " +
                                    std::string(phase_name(phase)));
  }

  void receive(PartyId to, PartyId from, const Envelope& e) {
    switch (to.role) {
      case Role::kUser:
        user_receive(users.at(to.index), from, e);
        return;
      case Role::kCsp:
        if (three_party) {
          csp_receive_3(from, e);
        } else {
          csp_receive_2(from, e);
        }
        return;
      case Role::kAnalyst:
        analyst_receive(from, e);
        return;
    }
  }

  std::vector<int64_t> decrypt_outputs(const bfv::SecretKey& sk,
                                       const bfv::Ciphertext& c) const {
    return hhe_dec(*hc, sk, c, model->n_out);
  }

  void user_receive(UserParty& u, PartyId from, const Envelope& e) {
    const PartyId me = PartyId::user(u.id);
    if (three_party || u.phase != Phase::kEval || e.type != MsgType::kM3TwoParty ||
        from != PartyId::csp()) {
      unexpected(e, from, u.phase);
    }
    Bytes payload;
    timed(me, Phase::kEval, [&] {
      payload = open(pki->csp.verification_key(), e, cfg.freshness, now);
    });
    u.deadline.reset();
    u.phase = Phase::kClassify;
    timed(me, Phase::kClassify, [&] {
      ByteReader r(payload);
      const auto cts = read_cts(*hc->bfv(), r);
      r.expect_end();
      if (cts.size() != u.inputs->size()) {
        fail(ErrorCode::kMalformed, "result count does not match the inputs");
      }
      for (const auto& c : cts) u.results.push_back(decrypt_outputs(u.keys->sk, c));
    });
    u.phase = Phase::kDone;
  }

  std::shared_ptr<const EvalKeys> store_evk(PartyId owner, const Envelope& e) {
    const Bytes inner = open_wrapped(pki->verification_key(owner), pki->csp_wrap, e,
                                     cfg.freshness, now);
    auto evk = std::make_shared<const EvalKeys>(EvalKeys::deserialize(*hc->bfv(), inner));
    csp.evk_store[owner] = evk;
    hold("evk:" + party_name(owner), inner);
    return evk;
  }

  std::shared_ptr<const Upload> accept_upload(PartyId from, const Envelope& e) {
    const Bytes payload = open(pki->verification_key(from), e, cfg.freshness, now);
    auto up = std::make_shared<const Upload>(decode_upload(*hc->bfv(), payload));
    hold("upload:" + party_name(from), payload);
    return up;
  }

  std::vector<bfv::Ciphertext> evaluate(const EvalKeys& evk, const Upload& up) const {
    std::vector<bfv::Ciphertext> cx =
        hhe_decomp_batch(*hc, evk, up.cts, up.key, cfg.decomp_threads);
    std::vector<bfv::Ciphertext> res;
    res.reserve(cx.size());
    for (const auto& c : cx) {
      res.push_back(csp.model ? hhe_eval_linear(*hc, evk, *csp.model, c)
                              : hhe_eval_linear(*hc, evk, *model, c));
    }
    return res;
  }

  void csp_receive_2(PartyId from, const Envelope& e) {
    const PartyId me = PartyId::csp();
    if (from.role != Role::kUser) unexpected(e, from, csp.phase);
    if (csp.phase == Phase::kSetup && e.type == MsgType::kM1) {
      timed(me, Phase::kSetup, [&] { store_evk(from, e); });
      csp.phase = Phase::kUpload;
      csp.deadline = now + cfg.receive_timeout;
      return;
    }
    if (csp.phase != Phase::kUpload || e.type != MsgType::kM2) unexpected(e, from, csp.phase);
    auto it = csp.evk_store.find(from);
    if (it == csp.evk_store.end()) fail(ErrorCode::kMissingEvalKey, party_name(from));
    std::shared_ptr<const Upload> up;
    timed(me, Phase::kUpload, [&] { up = accept_upload(from, e); });
    csp.deadline.reset();
    csp.phase = Phase::kEval;
    timed(me, Phase::kEval, [&] {
      Bytes payload = encode_ciphertexts(evaluate(*it->second, *up));
      hold("result:" + party_name(from), payload);
      send(me, from, seal(pki->csp, MsgType::kM3TwoParty, std::move(payload), now));
    });
    csp.phase = Phase::kDone;
  }

  void csp_receive_3(PartyId from, const Envelope& e) {
    const PartyId me = PartyId::csp();
    if (csp.phase == Phase::kSetup) {
      if (e.type != MsgType::kM1 || from != PartyId::analyst()) unexpected(e, from, csp.phase);
      timed(me, Phase::kSetup, [&] { store_evk(from, e); });
      csp.phase = Phase::kUpload;
      csp.deadline = now + cfg.receive_timeout;
      return;
    }
    if (csp.phase != Phase::kUpload) unexpected(e, from, csp.phase);
    if (e.type == MsgType::kM2 && from.role == Role::kUser &&
        from.index < users.size() && !csp.uploads.count(from.index)) {
      timed(me, Phase::kUpload, [&] { csp.uploads[from.index] = {accept_upload(from, e)}; });
    } else if (e.type == MsgType::kM3ThreeParty && from == PartyId::analyst() &&
               !csp.model) {
      timed(me, Phase::kEval, [&] {
        const Bytes payload = open(pki->analyst.verification_key(), e, cfg.freshness, now);
        auto em = std::make_shared<const EncryptedModel>(
            EncryptedModel::deserialize(*hc->bfv(), payload));
        if (em->n_out != model->n_out || em->dim != model->dim) {
          fail(ErrorCode::kLayoutMismatch, "encrypted model shape");
        }
        csp.model = em;
        hold("model:analyst", payload);
      });
    } else {
      unexpected(e, from, csp.phase);
    }
    csp.deadline = now + cfg.receive_timeout;
    if (csp.uploads.size() < users.size() || !csp.model) return;

    csp.deadline.reset();
    csp.phase = Phase::kEval;
    timed(me, Phase::kEval, [&] {
      const EvalKeys& evk = *csp.evk_store.at(PartyId::analyst());
      ByteWriter w;
      w.u32(uint32_t(csp.uploads.size()));
      for (const auto& [id, stored] : csp.uploads) {
        w.u32(id);
        w.blob(encode_ciphertexts(evaluate(evk, *stored.upload)));
      }
      Bytes payload = w.take();
      hold("result:analyst", payload);
      send(me, PartyId::analyst(), seal(pki->csp, MsgType::kM4, std::move(payload), now));
    });
    csp.phase = Phase::kDone;
  }

  void analyst_receive(PartyId from, const Envelope& e) {
    const PartyId me = PartyId::analyst();
    if (analyst.phase != Phase::kEval || e.type != MsgType::kM4 || from != PartyId::csp()) {
      unexpected(e, from, analyst.phase);
    }
    Bytes payload;
    timed(me, Phase::kEval, [&] {
      payload = open(pki->csp.verification_key(), e, cfg.freshness, now);
    });
    analyst.deadline.reset();
    analyst.phase = Phase::kClassify;
    timed(me, Phase::kClassify, [&] {
      ByteReader r(payload);
      const uint32_t n = r.u32();
      if (n != users.size()) fail(ErrorCode::kMalformed, "result user count");
      for (uint32_t k = 0; k < n; ++k) {
        const uint32_t id = r.u32();
        if (id >= users.size() || analyst.results.count(id)) {
          fail(ErrorCode::kMalformed, "result user id");
        }
        ByteReader inner(r.blob());
        const auto cts = read_cts(*hc->bfv(), inner);
        inner.expect_end();
        if (cts.size() != users[id].inputs->size()) {
          fail(ErrorCode::kMalformed, "result count does not match the inputs");
        }
        auto& out = analyst.results[id];
        for (const auto& c : cts) out.push_back(decrypt_outputs(analyst.keys->sk, c));
      }
      r.expect_end();
    });
    analyst.phase = Phase::kDone;
  }

  // ---- event loop ----

  std::vector<Pending>::iterator next_pending() {
    return std::min_element(pending.begin(), pending.end(),
                            [](const Pending& a, const Pending& b) {
                              return std::tie(a.deliver_at, a.seq) <
                                     std::tie(b.deliver_at, b.seq);
                            });
  }

  void deliver(std::vector<Pending>::iterator it) {
    Pending msg = std::move(*it);
    pending.erase(it);
    now = std::max(now, msg.deliver_at);
    TranscriptEntry& entry = transcript.entries[msg.entry];
    if (entry.delivered_at == 0) entry.delivered_at = now;
    const PartyId to = msg.meta.to;
    PartyBase& receiver = party(to);
    if (receiver.phase == Phase::kDone) {
      entry.action += ",ignored";
      return;
    }
    try {
      if (tcp) msg.wire = tcp->carry(msg.wire);
      const Envelope e = Envelope::parse(msg.wire);
      receive(to, msg.meta.from, e);
    } catch (const Error& ex) {
      abort(to, ex.code(), ex.what());
    }
  }

  void finish_if_complete() {
    if (done) return;
    for (PartyId p : all_parties()) {
      if (party(p).phase != Phase::kDone) return;
    }
    done = true;
    transcript.completed = true;
    pending.clear();
    if (three_party) {
      for (const auto& [id, res] : analyst.results) transcript.results.push_back(res);
    } else {
      for (const auto& u : users) transcript.results.push_back(u.results);
    }
  }

  bool step() {
    if (done) return false;
    const auto msg = next_pending();
    std::optional<std::pair<uint64_t, PartyId>> deadline;
    for (PartyId p : all_parties()) {
      const PartyBase& pb = party(p);
      if (pb.phase == Phase::kDone || pb.phase == Phase::kAborted || !pb.deadline) continue;
      if (!deadline || *pb.deadline < deadline->first) deadline = {{*pb.deadline, p}};
    }
    if (pending.empty() && !initiatives.empty()) {
      const auto [who, what] = initiatives.front();
      initiatives.pop_front();
      run_initiative(who, what);
    } else if (deadline && (pending.empty() || deadline->first < msg->deliver_at)) {
      now = std::max(now, deadline->first);
      abort(deadline->second, ErrorCode::kTimeout,
            "no message within " + std::to_string(cfg.receive_timeout) + " s");
    } else if (!pending.empty()) {
      deliver(msg);
    } else {
      PartyId stuck = PartyId::csp();
      for (PartyId p : all_parties()) {
        if (party(p).phase != Phase::kDone) stuck = p;
      }
      abort(stuck, ErrorCode::kProtocolAbort, "stalled with nothing to deliver");
    }
    finish_if_complete();
    return !done;
  }
};

namespace {

void check_inputs(const std::vector<FieldVector>& xs, const ModelParams& model) {
  for (const auto& x : xs) {
    if (x.size() != model.dim) fail(ErrorCode::kLengthMismatch, "input length != model dim");
  }
}

std::unique_ptr<ProtocolSession::State> make_state(const ProtocolConfig& cfg,
                                                   const ModelParams& model,
                                                   size_t n_users) {
  if (n_users == 0) fail(ErrorCode::kUsage, "at least one user is required");
  if (model.w.size() != model.n_out * model.dim || model.b.size() != model.n_out) {
    fail(ErrorCode::kLengthMismatch, "model shape does not match its arrays");
  }
  auto s = std::make_unique<ProtocolSession::State>();
  s->cfg = cfg;
  s->now = cfg.start_time;
  s->model = std::make_shared<const ModelParams>(model);
  if (cfg.context) {
    const HheParams& hp = cfg.context->params();
    if (hp.preset != cfg.preset || !(hp.cipher == cfg.cipher) ||
        hp.max_inputs < model.dim || hp.max_outputs < model.n_out) {
      fail(ErrorCode::kConfigMismatch, "shared context does not fit this run");
    }
    s->hc = cfg.context;
  } else {
    s->hc = std::make_shared<const HheContext>(hhe_params_for(cfg, model));
  }
  const Prng root(cfg.seed);
  if (cfg.pki) {
    if (cfg.pki->users.size() < n_users) fail(ErrorCode::kConfigMismatch, "pki too small");
    s->pki = cfg.pki;
  } else {
    Prng rng = root.derive("pki");
    s->pki = std::make_shared<const Pki>(Pki::generate(n_users, rng));
  }
  for (size_t i = 0; i < n_users; ++i) {
    UserParty u(root.derive("user" + std::to_string(i)));
    u.id = uint32_t(i);
    s->users.push_back(std::move(u));
  }
  s->analyst = AnalystParty(root.derive("analyst"));
  s->csp.deadline = cfg.start_time + cfg.receive_timeout;
  if (cfg.transport == TransportKind::kTcp) s->tcp = std::make_shared<TcpLink>();
  return s;
}

}  // namespace

ProtocolSession::ProtocolSession(std::unique_ptr<State> s) : s_(std::move(s)) {}
ProtocolSession::~ProtocolSession() = default;
ProtocolSession::ProtocolSession(const ProtocolSession& o)
    : s_(std::make_unique<State>(*o.s_)) {}
ProtocolSession& ProtocolSession::operator=(const ProtocolSession& o) {
  if (this != &o) s_ = std::make_unique<State>(*o.s_);
  return *this;
}
ProtocolSession::ProtocolSession(ProtocolSession&&) noexcept = default;
ProtocolSession& ProtocolSession::operator=(ProtocolSession&&) noexcept = default;

ProtocolSession ProtocolSession::two_party(const ProtocolConfig& cfg,
                                           std::vector<FieldVector> inputs,
                                           const ModelParams& model) {
  check_inputs(inputs, model);
  auto s = make_state(cfg, model, 1);
  s->users[0].inputs = std::make_shared<const std::vector<FieldVector>>(std::move(inputs));
  s->initiatives = {{PartyId::user(0), Initiative::kUserSetup},
                    {PartyId::user(0), Initiative::kUserUpload}};
  return ProtocolSession(std::move(s));
}

ProtocolSession ProtocolSession::three_party(
    const ProtocolConfig& cfg, std::vector<std::vector<FieldVector>> users,
    const ModelParams& model) {
  for (const auto& xs : users) check_inputs(xs, model);
  auto s = make_state(cfg, model, users.size());
  s->three_party = true;
  s->initiatives.push_back({PartyId::analyst(), Initiative::kAnalystSetup});
  for (size_t i = 0; i < users.size(); ++i) {
    s->users[i].inputs =
        std::make_shared<const std::vector<FieldVector>>(std::move(users[i]));
    // Users only upload; their Setup is reading the analyst's published key.
    s->initiatives.push_back({PartyId::user(uint32_t(i)), Initiative::kUserUpload});
  }
  s->initiatives.push_back({PartyId::analyst(), Initiative::kAnalystModel});
  return ProtocolSession(std::move(s));
}

void ProtocolSession::set_script(std::vector<InterceptAction> script) {
  s_->script = std::move(script);
}

void ProtocolSession::intercept_queued(const InterceptAction& a) {
  s_->intercept_queued(a);
}

bool ProtocolSession::step() { return s_->step(); }

const Transcript& ProtocolSession::run() {
  while (s_->step()) {
  }
  return s_->transcript;
}

bool ProtocolSession::finished() const { return s_->done; }
const Transcript& ProtocolSession::transcript() const { return s_->transcript; }
const HheContext& ProtocolSession::context() const { return *s_->hc; }
const Pki& ProtocolSession::pki() const { return *s_->pki; }

std::optional<MessageMeta> ProtocolSession::next_delivery() const {
  State& s = *s_;
  if (s.done || s.pending.empty()) return std::nullopt;
  const auto it = s.next_pending();
  for (PartyId p : s.all_parties()) {
    const PartyBase& pb = s.party(p);
    if (pb.phase != Phase::kDone && pb.phase != Phase::kAborted && pb.deadline &&
        *pb.deadline < it->deliver_at) {
      return std::nullopt;
    }
  }
  return it->meta;
}

std::vector<HeldItem> ProtocolSession::csp_inventory() const {
  std::vector<HeldItem> items = s_->csp.held;
  if (!s_->three_party) {
    // The server owns the model in the two-party protocol.
    ByteWriter w;
    for (int64_t v : s_->model->w) w.u32(uint32_t(int32_t(v)));
    for (int64_t v : s_->model->b) w.u32(uint32_t(int32_t(v)));
    items.push_back({"own-model", std::make_shared<const Bytes>(w.take())});
  }
  return items;
}

std::vector<HeldItem> ProtocolSession::secret_inventory() const {
  const State& s = *s_;
  std::vector<HeldItem> items;
  auto add = [&items](std::string kind, Bytes b) {
    items.push_back({std::move(kind), std::make_shared<const Bytes>(std::move(b))});
  };
  for (const auto& u : s.users) {
    for (const auto& x : *u.inputs) {
      ByteWriter w;
      for (size_t i = 0; i < x.size(); ++i) w.u32(x[i]);
      add("input:" + party_name(PartyId::user(u.id)), w.take());
    }
    if (u.keys) add("sk:" + party_name(PartyId::user(u.id)), u.keys->sk.serialize());
  }
  if (s.analyst.keys) add("sk:analyst", s.analyst.keys->sk.serialize());
  if (s.three_party) {
    ByteWriter w;
    for (int64_t v : s.model->w) w.u32(uint32_t(int32_t(v)));
    for (int64_t v : s.model->b) w.u32(uint32_t(int32_t(v)));
    add("model:analyst", w.take());
  }
  return items;
}

Phase ProtocolSession::phase_of(PartyId p) const { return s_->party(p).phase; }

ProtocolResults run_2gml(const ProtocolConfig& cfg, const std::vector<FieldVector>& inputs,
                         const ModelParams& model, Transcript* transcript) {
  ProtocolSession session = ProtocolSession::two_party(cfg, inputs, model);
  const Transcript& t = session.run();
  if (transcript) *transcript = t;
  if (t.abort) throw ProtocolAbort(*t.abort);
  return t.results;
}

ProtocolResults run_3gml(const ProtocolConfig& cfg,
                         const std::vector<std::vector<FieldVector>>& users,
                         const ModelParams& model, Transcript* transcript) {
  ProtocolSession session = ProtocolSession::three_party(cfg, users, model);
  const Transcript& t = session.run();
  if (transcript) *transcript = t;
  if (t.abort) throw ProtocolAbort(*t.abort);
  return t.results;
}

Transcript adversary_script(ProtocolSession session, std::vector<InterceptAction> script) {
  session.set_script(std::move(script));
  return session.run();
}

std::vector<TamperOutcome> tamper_sweep(const ProtocolSession& honest_start, size_t stride) {
  if (stride == 0) stride = 1;
  // Honest run, snapshotting the session before every delivery.
  ProtocolSession honest = honest_start;
  std::map<size_t, ProtocolSession> snapshots;
  while (!honest.finished()) {
    const auto next = honest.next_delivery();
    if (next && !snapshots.count(next->index)) snapshots.emplace(next->index, honest);
    honest.step();
  }
  const Transcript& reference = honest.transcript();
  if (!reference.completed) fail(ErrorCode::kProtocolAbort, "honest run did not complete");

  std::vector<TamperOutcome> out;
  for (const auto& [index, snap] : snapshots) {
    const TranscriptEntry& entry = reference.entries[index];
    TamperOutcome o;
    o.message_index = index;
    o.type = entry.meta.type;
    for (size_t pos = 0; pos < entry.wire_bytes; pos += stride) {
      ProtocolSession s = snap;
      // Vary the flipped bit across positions.
      s.intercept_queued(InterceptAction::flip(index, pos, uint8_t(1u << (pos % 8))));
      const Transcript& t = s.run();
      ++o.positions;
      if (t.abort) {
        ++o.aborted;
        if (t.abort->party == entry.meta.to) ++o.aborted_at_receiver;
      } else if (t.results == reference.results) {
        ++o.completed_correct;
      } else {
        ++o.completed_wrong;
      }
    }
    out.push_back(o);
  }
  return out;
}

}  // namespace hheml
