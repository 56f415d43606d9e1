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

#include "hheml/ske.h"

#include <string>
#include <string_view>

#include "hheml/errors.h"

namespace hheml {

namespace {

constexpr std::string_view kAffineDomainTag = "hheml/ske-affine/v1";

// Accepting v < 2^32 - (2^32 mod p) keeps v mod p uniform.
constexpr uint64_t kRejectionBound =
    (uint64_t{1} << 32) - ((uint64_t{1} << 32) % kFieldModulus);

void put_le(std::vector<uint8_t>& out, uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(uint8_t(v >> (8 * i)));
}

uint64_t get_le(std::span<const uint8_t> in, size_t pos, int bytes) {
  uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | in[pos + i];
  return v;
}

std::vector<FieldElem> sample_field_elems(std::span<const uint8_t> seed,
                                          size_t count) {
  const std::span<const uint8_t> tag(
      reinterpret_cast<const uint8_t*>(kAffineDomainTag.data()),
      kAffineDomainTag.size());
  const std::span<const uint8_t> parts[] = {tag, seed};
  // XOF output is prefix-consistent, so a retry with a longer squeeze sees
  // the same leading bytes.
  size_t squeeze = 4 * (count + 16);
  for (;;) {
    auto stream = shake128(parts, squeeze);
    std::vector<FieldElem> out;
    out.reserve(count);
    for (size_t pos = 0; pos + 4 <= stream.size() && out.size() < count;
         pos += 4) {
      uint64_t v = get_le(stream, pos, 4);
      if (v < kRejectionBound) out.push_back(FieldElem(v % kFieldModulus));
    }
    if (out.size() == count) return out;
    squeeze *= 2;
  }
}

// Field-element domain for the round function.
struct FieldOps {
  using Elem = FieldElem;
  Elem add(Elem a, Elem b) const { return field_add(a, b); }
  Elem mul(Elem a, Elem b) const { return field_mul(a, b); }
  std::vector<Elem> affine(const AffineLayer& layer,
                           const std::vector<Elem>& v) const {
    return layer.apply(v);
  }
};

// Tracks multiplicative depth instead of values. Constants sit at depth 0
// and multiplication by a public constant does not add depth.
struct DepthOps {
  using Elem = int;
  Elem add(Elem a, Elem b) const { return std::max(a, b); }
  Elem mul(Elem a, Elem b) const { return std::max(a, b) + 1; }
  std::vector<Elem> affine(const AffineLayer&, const std::vector<Elem>& v) const {
    int d = 0;
    for (int x : v) d = std::max(d, x);
    return std::vector<Elem>(v.size(), d);
  }
};

template <class Ops, class LayerFn>
std::vector<typename Ops::Elem> keystream_circuit(
    const CipherConfig& cfg, std::vector<typename Ops::Elem> l,
    std::vector<typename Ops::Elem> r, const Ops& ops, LayerFn layer) {
  const uint32_t t = cfg.t;
  for (uint32_t j = 0; j < cfg.rounds; ++j) {
    l = ops.affine(layer(j, Branch::kLeft), l);
    r = ops.affine(layer(j, Branch::kRight), r);
    for (uint32_t i = 0; i < t; ++i) {
      auto nl = ops.add(ops.add(l[i], l[i]), r[i]);
      auto nr = ops.add(ops.add(r[i], r[i]), l[i]);
      l[i] = nl;
      r[i] = nr;
    }
    if (j + 1 < cfg.rounds) {
      for (uint32_t i = t - 1; i >= 1; --i) {
        l[i] = ops.add(l[i], ops.mul(l[i - 1], l[i - 1]));
        r[i] = ops.add(r[i], ops.mul(r[i - 1], r[i - 1]));
      }
    } else {
      for (uint32_t i = 0; i < t; ++i) {
        l[i] = ops.mul(l[i], ops.mul(l[i], l[i]));
        r[i] = ops.mul(r[i], ops.mul(r[i], r[i]));
      }
    }
  }
  return ops.affine(layer(cfg.rounds, Branch::kLeft), l);
}

}  // namespace

void CipherConfig::validate() const {
  if (t < 4 || rounds < 2) {
    fail(ErrorCode::kConfigMismatch,
         "cipher config needs t >= 4 and rounds >= 2 (t=" + std::to_string(t) +
             ", rounds=" + std::to_string(rounds) + ")");
  }
}

std::vector<FieldElem> AffineLayer::apply(std::span<const FieldElem> in) const {
  std::vector<FieldElem> out(t);
  for (uint32_t i = 0; i < t; ++i) {
    uint64_t acc = constant[i];
    const FieldElem* row = &matrix[size_t(i) * t];
    for (uint32_t j = 0; j < t; ++j) {
      acc += uint64_t(row[j]) * in[j];
      if ((j & 0x3f) == 0x3f) acc %= kFieldModulus;
    }
    out[i] = FieldElem(acc % kFieldModulus);
  }
  return out;
}

AffineLayer affine_layer(const CipherConfig& cfg, const Nonce& nonce,
                         uint64_t block_index, uint32_t round, Branch branch) {
  std::vector<uint8_t> seed(nonce.begin(), nonce.end());
  put_le(seed, block_index, 8);
  put_le(seed, round, 4);
  seed.push_back(static_cast<uint8_t>(branch));

  const size_t t = cfg.t;
  auto elems = sample_field_elems(seed, t * t + t);
  AffineLayer layer;
  layer.t = cfg.t;
  layer.matrix.assign(elems.begin(), elems.begin() + t * t);
  layer.constant.assign(elems.begin() + t * t, elems.end());
  return layer;
}

SymmetricKey ske_gen(const CipherConfig& cfg, Prng& rng) {
  cfg.validate();
  std::vector<FieldElem> k(2 * cfg.t);
  for (auto& e : k) e = FieldElem(rng.uniform(kFieldModulus));
  return SymmetricKey{FieldVector::from_canonical(std::move(k))};
}

SymmetricKey ske_gen(const CipherConfig& cfg) {
  Prng rng;
  return ske_gen(cfg, rng);
}

FieldVector keystream_block(const CipherConfig& cfg, const SymmetricKey& key,
                            const Nonce& nonce, uint64_t block_index) {
  cfg.validate();
  if (key.k.size() != 2 * cfg.t) {
    fail(ErrorCode::kConfigMismatch, "key length does not match 2t");
  }
  auto elems = key.k.elems();
  std::vector<FieldElem> l(elems.begin(), elems.begin() + cfg.t);
  std::vector<FieldElem> r(elems.begin() + cfg.t, elems.end());
  auto out = keystream_circuit(
      cfg, std::move(l), std::move(r), FieldOps{},
      [&](uint32_t round, Branch b) {
        return affine_layer(cfg, nonce, block_index, round, b);
      });
  return FieldVector::from_canonical(std::move(out));
}

int keystream_depth(const CipherConfig& cfg) {
  cfg.validate();
  std::vector<int> l(cfg.t, 0), r(cfg.t, 0);
  AffineLayer unused;
  auto out = keystream_circuit(cfg, std::move(l), std::move(r), DepthOps{},
                               [&](uint32_t, Branch) -> const AffineLayer& {
                                 return unused;
                               });
  int d = 0;
  for (int x : out) d = std::max(d, x);
  return d;
}

std::vector<uint8_t> SymCiphertext::serialize() const {
  std::vector<uint8_t> out;
  out.reserve(29 + 4 * body.size());
  out.push_back(kVersion);
  out.insert(out.end(), nonce.begin(), nonce.end());
  put_le(out, start_counter, 8);
  put_le(out, body.size(), 4);
  for (FieldElem e : body.elems()) put_le(out, e, 4);
  return out;
}

SymCiphertext SymCiphertext::deserialize(std::span<const uint8_t> bytes) {
  constexpr size_t kHeader = 1 + 16 + 8 + 4;
  if (bytes.size() < kHeader) fail(ErrorCode::kParseError, "short header");
  if (bytes[0] != kVersion) fail(ErrorCode::kParseError, "bad version");
  SymCiphertext c;
  std::copy(bytes.begin() + 1, bytes.begin() + 17, c.nonce.begin());
  c.start_counter = get_le(bytes, 17, 8);
  const uint64_t len = get_le(bytes, 25, 4);
  if (bytes.size() != kHeader + 4 * len) {
    fail(ErrorCode::kParseError, "length field does not match body");
  }
  std::vector<FieldElem> body(len);
  for (size_t i = 0; i < len; ++i) {
    body[i] = FieldElem(get_le(bytes, kHeader + 4 * i, 4));
  }
  try {
    c.body = FieldVector::from_canonical(std::move(body));
  } catch (const Error& e) {
    fail(ErrorCode::kParseError, e.what());
  }
  return c;
}

SymCiphertext ske_enc(const CipherConfig& cfg, const SymmetricKey& key,
                      const FieldVector& x, const Nonce& nonce,
                      uint64_t start_counter) {
  SymCiphertext c;
  c.nonce = nonce;
  c.start_counter = start_counter;
  std::vector<FieldElem> body(x.size());
  FieldVector ks;
  for (size_t i = 0; i < x.size(); ++i) {
    if (i % cfg.t == 0) {
      ks = keystream_block(cfg, key, nonce, start_counter + i / cfg.t);
    }
    body[i] = field_add(x[i], ks[i % cfg.t]);
  }
  c.body = FieldVector::from_canonical(std::move(body));
  return c;
}

FieldVector ske_dec(const CipherConfig& cfg, const SymmetricKey& key,
                    const SymCiphertext& c) {
  std::vector<FieldElem> x(c.body.size());
  FieldVector ks;
  for (size_t i = 0; i < x.size(); ++i) {
    if (i % cfg.t == 0) {
      ks = keystream_block(cfg, key, c.nonce, c.start_counter + i / cfg.t);
    }
    x[i] = field_sub(c.body[i], ks[i % cfg.t]);
  }
  return FieldVector::from_canonical(std::move(x));
}

SkeSession::SkeSession(CipherConfig cfg, SymmetricKey key, Prng rng)
    : cfg_(cfg), key_(std::move(key)), rng_(std::move(rng)) {
  cfg_.validate();
  if (key_.k.size() != 2 * cfg_.t) {
    fail(ErrorCode::kConfigMismatch, "key length does not match 2t");
  }
}

SymCiphertext SkeSession::encrypt(const FieldVector& x) {
  Nonce nonce;
  do {
    rng_.fill(nonce);
  } while (used_.contains(nonce));
  return encrypt(x, nonce);
}

SymCiphertext SkeSession::encrypt(const FieldVector& x, const Nonce& nonce) {
  if (!used_.insert(nonce).second) {
    fail(ErrorCode::kNonceReuse, "nonce already used under this key");
  }
  return ske_enc(cfg_, key_, x, nonce);
}

FieldVector SkeSession::decrypt(const SymCiphertext& c) const {
  return ske_dec(cfg_, key_, c);
}

}  // namespace hheml
