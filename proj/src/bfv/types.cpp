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

#include "hheml/bfv/types.h"

#include <string>

#include "hheml/errors.h"

namespace hheml::bfv {

namespace {

void write_header(ByteWriter& w, ObjectKind kind, uint64_t params_id) {
  w.u8(kSerialVersion);
  w.u8(uint8_t(kind));
  w.u64(params_id);
}

void read_header(ByteReader& r, ObjectKind kind, const BfvContext& ctx) {
  if (r.u8() != kSerialVersion) fail(ErrorCode::kParseError, "bad version");
  if (r.u8() != uint8_t(kind)) fail(ErrorCode::kParseError, "wrong object kind");
  if (r.u64() != ctx.params_id()) {
    fail(ErrorCode::kParamMismatch, "object belongs to another parameter set");
  }
}

// Reads `polys` polynomials over `base`, checking every residue is canonical.
void read_polys(ByteReader& r, const RnsBase& base, size_t n, size_t polys,
                uint64_t* out) {
  const size_t k = base.size();
  r.words({out, polys * k * n});
  for (size_t p = 0; p < polys; ++p) {
    for (size_t j = 0; j < k; ++j) {
      const uint64_t q = base[j].value();
      const uint64_t* row = out + (p * k + j) * n;
      for (size_t i = 0; i < n; ++i) {
        if (row[i] >= q) fail(ErrorCode::kParseError, "residue out of range");
      }
    }
  }
}

void write_kswitch(ByteWriter& w, const KSwitchKey& k) { w.words(k.data); }

KSwitchKey read_kswitch(ByteReader& r, const BfvContext& ctx) {
  KSwitchKey k;
  const size_t polys = 2 * ctx.params().digit_count();
  k.data.resize(polys * ctx.key_base().size() * ctx.n());
  read_polys(r, ctx.key_base(), ctx.n(), polys, k.data.data());
  return k;
}

}  // namespace

Ciphertext::Ciphertext(const BfvContext& ctx, size_t size)
    : size_(size),
      n_(ctx.n()),
      rns_(ctx.q_size()),
      params_id_(ctx.params_id()),
      data_(size * ctx.q_size() * ctx.n(), 0) {}

void Ciphertext::resize(size_t size) {
  size_ = size;
  data_.resize(size * rns_ * n_, 0);
}

Bytes Ciphertext::serialize() const {
  ByteWriter w(serialized_size());
  write_header(w, ObjectKind::kCiphertext, params_id_);
  w.u8(uint8_t(size_));
  w.u8(is_ntt_ ? 1 : 0);
  w.words(data_);
  return w.take();
}

Ciphertext Ciphertext::deserialize(const BfvContext& ctx,
                                   std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  read_header(r, ObjectKind::kCiphertext, ctx);
  const size_t size = r.u8();
  const uint8_t ntt = r.u8();
  if (size < 2 || size > 3 || ntt > 1) {
    fail(ErrorCode::kParseError, "bad ciphertext shape");
  }
  Ciphertext c(ctx, size);
  c.is_ntt_ = ntt == 1;
  read_polys(r, ctx.q_base(), ctx.n(), size, c.data_.data());
  r.expect_end();
  return c;
}

Bytes SecretKey::serialize() const {
  ByteWriter w(10 + coeffs.size());
  write_header(w, ObjectKind::kSecretKey, params_id);
  for (int8_t c : coeffs) w.u8(uint8_t(c));
  return w.take();
}

SecretKey SecretKey::deserialize(const BfvContext& ctx,
                                 std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  read_header(r, ObjectKind::kSecretKey, ctx);
  SecretKey sk;
  sk.params_id = ctx.params_id();
  const size_t n = ctx.n();
  sk.coeffs.resize(n);
  const auto raw = r.raw(n);
  r.expect_end();
  const RnsBase& base = ctx.key_base();
  sk.ntt.resize(base.size() * n);
  for (size_t i = 0; i < n; ++i) {
    const int8_t v = int8_t(raw[i]);
    if (v < -1 || v > 1) fail(ErrorCode::kParseError, "secret not ternary");
    sk.coeffs[i] = v;
  }
  for (size_t k = 0; k < base.size(); ++k) {
    uint64_t* row = sk.ntt.data() + k * n;
    for (size_t i = 0; i < n; ++i) row[i] = base[k].from_signed(sk.coeffs[i]);
    ctx.key_ntt(k).forward({row, n});
  }
  return sk;
}

Bytes PublicKey::serialize() const {
  ByteWriter w(10 + 8 * (p0.size() + p1.size()));
  write_header(w, ObjectKind::kPublicKey, params_id);
  w.words(p0);
  w.words(p1);
  return w.take();
}

PublicKey PublicKey::deserialize(const BfvContext& ctx,
                                 std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  read_header(r, ObjectKind::kPublicKey, ctx);
  PublicKey pk;
  pk.params_id = ctx.params_id();
  const size_t len = ctx.q_size() * ctx.n();
  pk.p0.resize(len);
  pk.p1.resize(len);
  read_polys(r, ctx.q_base(), ctx.n(), 1, pk.p0.data());
  read_polys(r, ctx.q_base(), ctx.n(), 1, pk.p1.data());
  r.expect_end();
  return pk;
}

Bytes RelinKey::serialize() const {
  ByteWriter w(10 + 8 * key.data.size());
  write_header(w, ObjectKind::kRelinKey, params_id);
  write_kswitch(w, key);
  return w.take();
}

RelinKey RelinKey::deserialize(const BfvContext& ctx,
                               std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  read_header(r, ObjectKind::kRelinKey, ctx);
  RelinKey rk;
  rk.params_id = ctx.params_id();
  rk.key = read_kswitch(r, ctx);
  r.expect_end();
  return rk;
}

Bytes GaloisKeys::serialize() const {
  size_t total = 14;
  for (const auto& [g, k] : keys) total += 4 + 8 * k.data.size();
  ByteWriter w(total);
  write_header(w, ObjectKind::kGaloisKeys, params_id);
  w.u32(uint32_t(keys.size()));
  for (const auto& [g, k] : keys) {
    w.u32(g);
    write_kswitch(w, k);
  }
  return w.take();
}

GaloisKeys GaloisKeys::deserialize(const BfvContext& ctx,
                                   std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  read_header(r, ObjectKind::kGaloisKeys, ctx);
  GaloisKeys gk;
  gk.params_id = ctx.params_id();
  const uint32_t count = r.u32();
  if (count > 4 * ctx.n()) fail(ErrorCode::kParseError, "too many keys");
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t g = r.u32();
    if (g % 2 == 0 || g >= 2 * ctx.n()) {
      fail(ErrorCode::kParseError, "invalid Galois element");
    }
    if (!gk.keys.emplace(g, read_kswitch(r, ctx)).second) {
      fail(ErrorCode::kParseError, "duplicate Galois element");
    }
  }
  r.expect_end();
  return gk;
}

}  // namespace hheml::bfv
