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

// Two-party (user + model-owning server) and three-party (users + server +
// model-owning analyst) protocol state machines over a simulated transport.
//
// Every party is a sequential state machine. The session owns the simulated
// clock and the delivery queue and is the only shared object. Parties talk
// exclusively through envelope bytes, so the interceptor can drop, rewrite,
// delay, duplicate or replay any message, and an optional loopback TCP link
// carries the identical bytes through a real socket.
//
// Sessions are copyable: immutable heavy state (contexts, key material,
// stored evaluation keys) is shared, so a snapshot taken before a delivery
// can be resumed many times with different interceptor scripts.

#ifndef HHEML_PROTOCOL_H_
#define HHEML_PROTOCOL_H_

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hheml/envelope.h"
#include "hheml/errors.h"
#include "hheml/hhe.h"
#include "hheml/model.h"

namespace hheml {

enum class Role : uint8_t { kUser, kCsp, kAnalyst };
enum class Phase : uint8_t { kSetup, kUpload, kEval, kClassify, kDone, kAborted };

std::string_view role_name(Role r);
std::string_view phase_name(Phase p);

struct PartyId {
  Role role = Role::kCsp;
  uint32_t index = 0;
  auto operator<=>(const PartyId&) const = default;
  static PartyId user(uint32_t i) { return {Role::kUser, i}; }
  static PartyId csp() { return {Role::kCsp, 0}; }
  static PartyId analyst() { return {Role::kAnalyst, 0}; }
};

// "user0", "csp", "analyst".
std::string party_name(PartyId p);

struct AbortInfo {
  PartyId party;
  Phase phase = Phase::kSetup;
  ErrorCode cause = ErrorCode::kProtocolAbort;
  std::string detail;
  uint64_t at = 0;
  bool operator==(const AbortInfo&) const = default;
};

class ProtocolAbort : public Error {
 public:
  explicit ProtocolAbort(AbortInfo info);
  const AbortInfo& info() const { return info_; }

 private:
  AbortInfo info_;
};

// Long-term keys: signing keys for every party and the server's wrap key.
// The verification keys and wrap public key are assumed authentic.
struct Pki {
  std::vector<SigningKey> users;
  SigningKey csp;
  SigningKey analyst;
  WrapKey csp_wrap;

  static Pki generate(size_t n_users, Prng& rng);
  const SigningKey& signing_key(PartyId p) const;
  const PublicBytes& verification_key(PartyId p) const {
    return signing_key(p).verification_key();
  }
};

enum class TransportKind : uint8_t { kSim, kTcp };

struct ProtocolConfig {
  bfv::Preset preset = bfv::Preset::kToy;
  CipherConfig cipher{};
  uint64_t start_time = 1'700'000'000;
  FreshnessPolicy freshness{};
  uint64_t receive_timeout = 30;  // simulated seconds
  uint64_t hop_latency = 1;
  Seed seed{};
  size_t decomp_threads = 1;
  TransportKind transport = TransportKind::kSim;
  // Shared long-term keys. Derived from `seed` when null.
  std::shared_ptr<const Pki> pki;
  // Reused across runs when set; must match preset, cipher and model shape.
  std::shared_ptr<const HheContext> context;
};

// Layout parameters that fit `model` under `cfg`.
HheParams hhe_params_for(const ProtocolConfig& cfg, const ModelParams& model);

// m2 payload: count (LE32) | length-prefixed symmetric ciphertexts |
// length-prefixed encrypted key.
Bytes encode_upload(const std::vector<SymCiphertext>& cts, const EncryptedKey& key);
// count (LE32) | length-prefixed BFV ciphertexts.
Bytes encode_ciphertexts(const std::vector<bfv::Ciphertext>& cts);

struct MessageMeta {
  size_t index = 0;  // position in send order, starting at 0
  MsgType type = MsgType::kM1;
  PartyId from;
  PartyId to;
  bool operator==(const MessageMeta&) const = default;
};

enum class ActionKind : uint8_t {
  kDrop,
  kFlipByte,   // wire[byte] ^= mask
  kReplace,    // wire = replacement
  kRewrite,    // wire = rewrite(wire)
  kDelay,      // delivery postponed by delay_seconds
  kDuplicate,  // delivered twice
};

struct InterceptAction {
  size_t message_index = 0;
  ActionKind kind = ActionKind::kDrop;
  size_t byte = 0;
  uint8_t mask = 0x01;
  Bytes replacement;
  std::function<Bytes(const Bytes&)> rewrite;
  uint64_t delay_seconds = 0;

  static InterceptAction drop(size_t msg);
  static InterceptAction flip(size_t msg, size_t byte, uint8_t mask = 0x01);
  static InterceptAction replace(size_t msg, Bytes wire);
  static InterceptAction rewrite_with(size_t msg,
                                      std::function<Bytes(const Bytes&)> fn);
  static InterceptAction delay(size_t msg, uint64_t seconds);
  static InterceptAction duplicate(size_t msg);
};

struct TranscriptEntry {
  MessageMeta meta;
  uint64_t sent_at = 0;
  uint64_t delivered_at = 0;  // 0 when dropped
  size_t wire_bytes = 0;      // as sent by the party
  size_t payload_bytes = 0;
  std::array<uint8_t, 32> wire_digest{};
  std::string action = "deliver";
  bool operator==(const TranscriptEntry&) const = default;
};

struct PhaseTiming {
  PartyId party;
  Phase phase = Phase::kSetup;
  double wall_ms = 0;
};

// results[u][i] holds the logits for input i of user u.
using ProtocolResults = std::vector<std::vector<std::vector<int64_t>>>;

struct Transcript {
  std::vector<TranscriptEntry> entries;
  // Wire bytes as sent, by message index.
  std::vector<Bytes> wires;
  std::optional<AbortInfo> abort;
  bool completed = false;
  ProtocolResults results;
  std::vector<PhaseTiming> timings;

  // Equality of everything except wall-clock timings.
  bool same_run(const Transcript& other) const;
  double phase_ms(Phase p) const;
  size_t bytes_of(MsgType t) const;
};

// Something the server stores, for the taint audit.
struct HeldItem {
  std::string kind;
  std::shared_ptr<const Bytes> bytes;
};

class ProtocolSession {
 public:
  static ProtocolSession two_party(const ProtocolConfig& cfg,
                                   std::vector<FieldVector> inputs,
                                   const ModelParams& model);
  static ProtocolSession three_party(const ProtocolConfig& cfg,
                                     std::vector<std::vector<FieldVector>> users,
                                     const ModelParams& model);

  // Actions apply to messages as they are sent.
  void set_script(std::vector<InterceptAction> script);
  // Applies `a` to a message already queued for delivery.
  void intercept_queued(const InterceptAction& a);
  // Processes one event (initiative, delivery or timeout). Returns false once
  // the run has completed or aborted.
  bool step();
  const Transcript& run();

  bool finished() const;
  const Transcript& transcript() const;
  // Index of the message the next step() delivers, if it is a delivery.
  std::optional<MessageMeta> next_delivery() const;
  std::vector<HeldItem> csp_inventory() const;
  // Plaintext inputs, secret keys and (three-party) the model as bytes: what
  // the server must never hold.
  std::vector<HeldItem> secret_inventory() const;
  Phase phase_of(PartyId p) const;
  const HheContext& context() const;
  const Pki& pki() const;

  ~ProtocolSession();
  ProtocolSession(const ProtocolSession&);
  ProtocolSession& operator=(const ProtocolSession&);
  ProtocolSession(ProtocolSession&&) noexcept;
  ProtocolSession& operator=(ProtocolSession&&) noexcept;

  struct State;

 private:
  explicit ProtocolSession(std::unique_ptr<State> s);
  std::unique_ptr<State> s_;
};

// Throws ProtocolAbort when the run aborts.
ProtocolResults run_2gml(const ProtocolConfig& cfg,
                         const std::vector<FieldVector>& inputs,
                         const ModelParams& model,
                         Transcript* transcript = nullptr);
ProtocolResults run_3gml(const ProtocolConfig& cfg,
                         const std::vector<std::vector<FieldVector>>& users,
                         const ModelParams& model,
                         Transcript* transcript = nullptr);

// Honest session with `script` applied; never throws on abort.
Transcript adversary_script(ProtocolSession session,
                            std::vector<InterceptAction> script);

// One single-byte flip of every byte of every message, each resumed from a
// snapshot taken just before that message's delivery.
struct TamperOutcome {
  size_t message_index = 0;
  MsgType type = MsgType::kM1;
  size_t positions = 0;
  size_t aborted = 0;
  size_t aborted_at_receiver = 0;
  size_t completed_correct = 0;
  size_t completed_wrong = 0;
};
// `stride` > 1 samples every stride-th byte position.
std::vector<TamperOutcome> tamper_sweep(const ProtocolSession& honest_start,
                                        size_t stride = 1);

}  // namespace hheml

#endif  // HHEML_PROTOCOL_H_
