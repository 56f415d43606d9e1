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

#include "hheml/envelope.h"

#include <openssl/evp.h>
#include <openssl/kdf.h>

#include <memory>
#include <string>

#include "hheml/errors.h"

namespace hheml {
namespace {

constexpr size_t kWrapNonce = 12;
constexpr size_t kWrapTag = 16;
constexpr std::string_view kWrapInfo = "hheml/evk-wrap/v1";

struct PkeyFree {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct PkeyCtxFree {
  void operator()(EVP_PKEY_CTX* p) const { EVP_PKEY_CTX_free(p); }
};
struct MdCtxFree {
  void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
};
struct CipherCtxFree {
  void operator()(EVP_CIPHER_CTX* p) const { EVP_CIPHER_CTX_free(p); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyFree>;
using PkeyCtxPtr = std::unique_ptr<EVP_PKEY_CTX, PkeyCtxFree>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxFree>;
using CipherCtxPtr = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxFree>;

[[noreturn]] void crypto_failure(const char* what) {
  fail(ErrorCode::kDecryptFailure, std::string("crypto backend: ") + what);
}

PkeyPtr private_key(int type, std::span<const uint8_t> raw) {
  PkeyPtr key(EVP_PKEY_new_raw_private_key(type, nullptr, raw.data(), raw.size()));
  if (!key) crypto_failure("bad private key");
  return key;
}

PkeyPtr public_key(int type, std::span<const uint8_t> raw) {
  PkeyPtr key(EVP_PKEY_new_raw_public_key(type, nullptr, raw.data(), raw.size()));
  if (!key) crypto_failure("bad public key");
  return key;
}

PublicBytes raw_public(EVP_PKEY* key) {
  PublicBytes out{};
  size_t len = out.size();
  if (EVP_PKEY_get_raw_public_key(key, out.data(), &len) != 1 || len != out.size()) {
    crypto_failure("public key export");
  }
  return out;
}

std::array<uint8_t, 32> x25519(std::span<const uint8_t> secret,
                               const PublicBytes& peer) {
  PkeyPtr mine = private_key(EVP_PKEY_X25519, secret);
  PkeyPtr theirs = public_key(EVP_PKEY_X25519, peer);
  PkeyCtxPtr ctx(EVP_PKEY_CTX_new(mine.get(), nullptr));
  std::array<uint8_t, 32> shared{};
  size_t len = shared.size();
  if (!ctx || EVP_PKEY_derive_init(ctx.get()) != 1 ||
      EVP_PKEY_derive_set_peer(ctx.get(), theirs.get()) != 1 ||
      EVP_PKEY_derive(ctx.get(), shared.data(), &len) != 1) {
    crypto_failure("key agreement");
  }
  return shared;
}

// HKDF-SHA256(ikm = shared, salt = eph_pub | receiver_pub, info).
std::array<uint8_t, 32> wrap_key(const std::array<uint8_t, 32>& shared,
                                 const PublicBytes& eph,
                                 const PublicBytes& receiver) {
  uint8_t salt[64];
  std::copy(eph.begin(), eph.end(), salt);
  std::copy(receiver.begin(), receiver.end(), salt + 32);
  PkeyCtxPtr ctx(EVP_PKEY_CTX_new_id(EVP_PKEY_HKDF, nullptr));
  std::array<uint8_t, 32> key{};
  size_t len = key.size();
  if (!ctx || EVP_PKEY_derive_init(ctx.get()) != 1 ||
      EVP_PKEY_CTX_set_hkdf_md(ctx.get(), EVP_sha256()) != 1 ||
      EVP_PKEY_CTX_set1_hkdf_salt(ctx.get(), salt, sizeof(salt)) != 1 ||
      EVP_PKEY_CTX_set1_hkdf_key(ctx.get(), shared.data(), int(shared.size())) != 1 ||
      EVP_PKEY_CTX_add1_hkdf_info(
          ctx.get(), reinterpret_cast<const unsigned char*>(kWrapInfo.data()),
          int(kWrapInfo.size())) != 1 ||
      EVP_PKEY_derive(ctx.get(), key.data(), &len) != 1) {
    crypto_failure("key derivation");
  }
  return key;
}

// ChaCha20-Poly1305 in one direction; returns false on a tag mismatch.
bool aead(bool encrypt, const std::array<uint8_t, 32>& key,
          std::span<const uint8_t> nonce, std::span<const uint8_t> aad,
          std::span<const uint8_t> in, uint8_t* out, uint8_t* tag) {
  CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
  int len = 0;
  if (!ctx ||
      EVP_CipherInit_ex(ctx.get(), EVP_chacha20_poly1305(), nullptr, nullptr,
                        nullptr, encrypt ? 1 : 0) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_SET_IVLEN, int(nonce.size()),
                          nullptr) != 1 ||
      EVP_CipherInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data(),
                        encrypt ? 1 : 0) != 1 ||
      EVP_CipherUpdate(ctx.get(), nullptr, &len, aad.data(), int(aad.size())) != 1) {
    crypto_failure("cipher setup");
  }
  // Process in chunks so lengths stay within int.
  constexpr size_t kChunk = size_t{1} << 30;
  for (size_t off = 0; off < in.size(); off += kChunk) {
    const size_t part = std::min(kChunk, in.size() - off);
    if (EVP_CipherUpdate(ctx.get(), out + off, &len, in.data() + off, int(part)) != 1) {
      crypto_failure("cipher update");
    }
  }
  if (!encrypt) {
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_SET_TAG, int(kWrapTag), tag) != 1) {
      crypto_failure("tag");
    }
  }
  uint8_t scratch[16];
  if (EVP_CipherFinal_ex(ctx.get(), scratch, &len) != 1) return false;
  if (encrypt &&
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_GET_TAG, int(kWrapTag), tag) != 1) {
    crypto_failure("tag");
  }
  return true;
}

}  // namespace

std::string_view msg_type_name(MsgType t) {
  switch (t) {
    case MsgType::kM1:
      return "m1";
    case MsgType::kM2:
      return "m2";
    case MsgType::kM3TwoParty:
      return "m3";
    case MsgType::kM3ThreeParty:
      return "m3-model";
    case MsgType::kM4:
      return "m4";
  }
  return "unknown";
}

SigningKey SigningKey::generate(Prng& rng) {
  SigningKey k;
  rng.fill(k.seed_);
  PkeyPtr key = private_key(EVP_PKEY_ED25519, k.seed_);
  k.public_ = raw_public(key.get());
  return k;
}

Bytes SigningKey::sign(std::span<const uint8_t> message) const {
  PkeyPtr key = private_key(EVP_PKEY_ED25519, seed_);
  MdCtxPtr ctx(EVP_MD_CTX_new());
  Bytes sig(kSignatureSize);
  size_t len = sig.size();
  if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1 ||
      EVP_DigestSign(ctx.get(), sig.data(), &len, message.data(), message.size()) != 1) {
    crypto_failure("sign");
  }
  sig.resize(len);
  return sig;
}

bool verify_signature(const PublicBytes& verification_key,
                      std::span<const uint8_t> message,
                      std::span<const uint8_t> signature) {
  PkeyPtr key(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr,
                                          verification_key.data(),
                                          verification_key.size()));
  if (!key) return false;
  MdCtxPtr ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1) {
    return false;
  }
  return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(),
                          message.data(), message.size()) == 1;
}

WrapKey WrapKey::generate(Prng& rng) {
  WrapKey k;
  rng.fill(k.secret_);
  PkeyPtr key = private_key(EVP_PKEY_X25519, k.secret_);
  k.public_ = raw_public(key.get());
  return k;
}

Bytes pke_wrap(const PublicBytes& receiver, std::span<const uint8_t> plaintext,
               Prng& rng) {
  std::array<uint8_t, 32> eph_secret{};
  rng.fill(eph_secret);
  PkeyPtr eph = private_key(EVP_PKEY_X25519, eph_secret);
  const PublicBytes eph_pub = raw_public(eph.get());
  const auto key = wrap_key(x25519(eph_secret, receiver), eph_pub, receiver);

  Bytes out(32 + kWrapNonce + plaintext.size() + kWrapTag);
  std::copy(eph_pub.begin(), eph_pub.end(), out.begin());
  rng.fill(std::span<uint8_t>(out.data() + 32, kWrapNonce));
  aead(true, key, {out.data() + 32, kWrapNonce}, {out.data(), 32}, plaintext,
       out.data() + 32 + kWrapNonce, out.data() + 32 + kWrapNonce + plaintext.size());
  return out;
}

Bytes pke_unwrap(const WrapKey& key, std::span<const uint8_t> wrapped) {
  if (wrapped.size() < 32 + kWrapNonce + kWrapTag) {
    fail(ErrorCode::kDecryptFailure, "wrapped blob too short");
  }
  PublicBytes eph_pub{};
  std::copy(wrapped.begin(), wrapped.begin() + 32, eph_pub.begin());
  std::array<uint8_t, 32> shared{};
  try {
    shared = x25519(key.secret_, eph_pub);
  } catch (const Error&) {
    fail(ErrorCode::kDecryptFailure, "bad ephemeral key");
  }
  const auto k = wrap_key(shared, eph_pub, key.public_);
  const size_t body = wrapped.size() - 32 - kWrapNonce - kWrapTag;
  Bytes out(body);
  uint8_t tag[kWrapTag];
  std::copy(wrapped.end() - kWrapTag, wrapped.end(), tag);
  if (!aead(false, k, wrapped.subspan(32, kWrapNonce), wrapped.subspan(0, 32),
            wrapped.subspan(32 + kWrapNonce, body), out.data(), tag)) {
    fail(ErrorCode::kDecryptFailure, "authentication tag mismatch");
  }
  return out;
}

Bytes Envelope::serialize() const {
  ByteWriter w(16 + payload.size() + signature.size());
  w.u8(version);
  w.u8(uint8_t(type));
  w.u64(timestamp);
  w.u32(uint32_t(payload.size()));
  w.raw(payload);
  w.u16(uint16_t(signature.size()));
  w.raw(signature);
  return w.take();
}

Envelope Envelope::parse(std::span<const uint8_t> bytes) {
  try {
    ByteReader r(bytes);
    Envelope e;
    e.version = r.u8();
    if (e.version != kEnvelopeVersion) {
      fail(ErrorCode::kMalformed, "unknown envelope version " + std::to_string(e.version));
    }
    const uint8_t type = r.u8();
    if (type < uint8_t(MsgType::kM1) || type > uint8_t(MsgType::kM4)) {
      fail(ErrorCode::kMalformed, "unknown message type " + std::to_string(type));
    }
    e.type = MsgType(type);
    e.timestamp = r.u64();
    auto payload = r.raw(r.u32());
    e.payload.assign(payload.begin(), payload.end());
    auto sig = r.raw(r.u16());
    e.signature.assign(sig.begin(), sig.end());
    r.expect_end();
    return e;
  } catch (const Error& err) {
    if (err.code() == ErrorCode::kMalformed) throw;
    fail(ErrorCode::kMalformed, err.what());
  }
}

std::array<uint8_t, 32> envelope_digest(uint64_t timestamp,
                                        std::span<const uint8_t> body) {
  MdCtxPtr ctx(EVP_MD_CTX_new());
  uint8_t ts[8];
  for (int i = 0; i < 8; ++i) ts[i] = uint8_t(timestamp >> (8 * i));
  std::array<uint8_t, 32> out{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), ts, sizeof(ts)) != 1 ||
      EVP_DigestUpdate(ctx.get(), body.data(), body.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), out.data(), &len) != 1) {
    crypto_failure("digest");
  }
  return out;
}

Envelope seal(const SigningKey& key, MsgType type, Bytes payload, uint64_t now) {
  Envelope e;
  e.type = type;
  e.timestamp = now;
  e.signature = key.sign(envelope_digest(now, payload));
  e.payload = std::move(payload);
  return e;
}

Envelope seal_wrapped(const SigningKey& key, MsgType type,
                      std::span<const uint8_t> inner,
                      const PublicBytes& receiver, uint64_t now, Prng& rng) {
  Envelope e;
  e.type = type;
  e.timestamp = now;
  e.signature = key.sign(envelope_digest(now, inner));
  e.payload = pke_wrap(receiver, inner, rng);
  return e;
}

namespace {

void check(const PublicBytes& vk, const Envelope& e,
           std::span<const uint8_t> signed_body, const FreshnessPolicy& policy,
           uint64_t now) {
  if (!verify_signature(vk, envelope_digest(e.timestamp, signed_body), e.signature)) {
    fail(ErrorCode::kSignatureInvalid,
         std::string(msg_type_name(e.type)) + " signature does not verify");
  }
  const uint64_t age = now >= e.timestamp ? now - e.timestamp : e.timestamp - now;
  if (age > policy.window_seconds) {
    fail(ErrorCode::kStaleMessage,
         std::string(msg_type_name(e.type)) + " is " + std::to_string(age) +
             " s away from now, window " + std::to_string(policy.window_seconds) + " s");
  }
}

}  // namespace

Bytes open(const PublicBytes& verification_key, const Envelope& e,
           const FreshnessPolicy& policy, uint64_t now) {
  check(verification_key, e, e.payload, policy, now);
  return e.payload;
}

Bytes open_wrapped(const PublicBytes& verification_key, const WrapKey& receiver,
                   const Envelope& e, const FreshnessPolicy& policy,
                   uint64_t now) {
  Bytes inner = pke_unwrap(receiver, e.payload);
  check(verification_key, e, inner, policy, now);
  return inner;
}

}  // namespace hheml
