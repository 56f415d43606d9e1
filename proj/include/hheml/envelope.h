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

// Signed, timestamped protocol messages and the public-key wrap used for
// the evaluation key.
//
// Wire format: version (1) | type (1) | timestamp LE64 | payload length LE32
// | payload | signature length LE16 | signature. The signature is Ed25519
// over SHA-256(timestamp LE64 | signed bytes), where the signed bytes are the
// payload itself or, for wrapped messages, the plaintext inside the wrap.

#ifndef HHEML_ENVELOPE_H_
#define HHEML_ENVELOPE_H_

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

#include "hheml/bytes.h"
#include "hheml/random.h"

namespace hheml {

// Version 1: Ed25519 / SHA-256 / X25519-HKDF-SHA256-ChaCha20-Poly1305.
inline constexpr uint8_t kEnvelopeVersion = 1;
inline constexpr size_t kSignatureSize = 64;

enum class MsgType : uint8_t {
  kM1 = 1,           // wrapped evaluation key
  kM2 = 2,           // symmetric ciphertext and encrypted key
  kM3TwoParty = 3,   // result ciphertext to the user
  kM3ThreeParty = 4, // encrypted model from the analyst
  kM4 = 5,           // result ciphertexts to the analyst
};

std::string_view msg_type_name(MsgType t);

using PublicBytes = std::array<uint8_t, 32>;

class SigningKey {
 public:
  // Ed25519 key from 32 bytes drawn from `rng`.
  static SigningKey generate(Prng& rng);

  const PublicBytes& verification_key() const { return public_; }
  Bytes sign(std::span<const uint8_t> message) const;

 private:
  std::array<uint8_t, 32> seed_{};
  PublicBytes public_{};
};

bool verify_signature(const PublicBytes& verification_key,
                      std::span<const uint8_t> message,
                      std::span<const uint8_t> signature);

// X25519 key pair for wrapping.
class WrapKey {
 public:
  static WrapKey generate(Prng& rng);
  const PublicBytes& public_key() const { return public_; }

 private:
  friend Bytes pke_unwrap(const WrapKey& key, std::span<const uint8_t> wrapped);
  std::array<uint8_t, 32> secret_{};
  PublicBytes public_{};
};

// eph_pub (32) | nonce (12) | ciphertext | tag (16).
Bytes pke_wrap(const PublicBytes& receiver, std::span<const uint8_t> plaintext,
               Prng& rng);
// Throws kDecryptFailure on any tampering or a wrong key.
Bytes pke_unwrap(const WrapKey& key, std::span<const uint8_t> wrapped);

struct FreshnessPolicy {
  uint64_t window_seconds = 60;
};

struct Envelope {
  uint8_t version = kEnvelopeVersion;
  MsgType type = MsgType::kM1;
  uint64_t timestamp = 0;
  Bytes payload;
  Bytes signature;

  Bytes serialize() const;
  // Throws kMalformed on framing errors or unknown version/type.
  static Envelope parse(std::span<const uint8_t> bytes);
  bool operator==(const Envelope&) const = default;
};

// SHA-256(timestamp LE64 | body).
std::array<uint8_t, 32> envelope_digest(uint64_t timestamp,
                                        std::span<const uint8_t> body);

Envelope seal(const SigningKey& key, MsgType type, Bytes payload,
              uint64_t now);
// Payload is pke_wrap(receiver, inner); the signature covers `inner`.
Envelope seal_wrapped(const SigningKey& key, MsgType type,
                      std::span<const uint8_t> inner,
                      const PublicBytes& receiver, uint64_t now, Prng& rng);

// Returns the payload iff the signature verifies and the timestamp is within
// the window of `now`. Throws kSignatureInvalid or kStaleMessage.
Bytes open(const PublicBytes& verification_key, const Envelope& e,
           const FreshnessPolicy& policy, uint64_t now);
// Unwraps first (kDecryptFailure), then checks as open().
Bytes open_wrapped(const PublicBytes& verification_key, const WrapKey& receiver,
                   const Envelope& e, const FreshnessPolicy& policy,
                   uint64_t now);

}  // namespace hheml

#endif  // HHEML_ENVELOPE_H_
