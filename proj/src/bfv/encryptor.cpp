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

#include "hheml/bfv/encryptor.h"

#include <algorithm>
#include <array>

#include "hheml/bfv/bigint.h"
#include "hheml/errors.h"
#include "sampling.h"

namespace hheml::bfv {

Encryptor::Encryptor(ContextPtr ctx, PublicKey pk)
    : ctx_(std::move(ctx)), pk_(std::move(pk)) {
  if (pk_.params_id != ctx_->params_id()) {
    fail(ErrorCode::kParamMismatch, "public key from another parameter set");
  }
}

Ciphertext Encryptor::encrypt(const Plaintext& m) const {
  Prng rng;
  return encrypt(m, rng);
}

Ciphertext Encryptor::encrypt(const Plaintext& m, Prng& rng) const {
  const size_t n = ctx_->n();
  const size_t L = ctx_->q_size();
  const uint64_t t = ctx_->plain_modulus().value();
  if (m.coeffs.size() != n) {
    fail(ErrorCode::kLengthMismatch, "plaintext has wrong degree");
  }
  for (uint64_t v : m.coeffs) {
    if (v >= t) fail(ErrorCode::kSlotOverflow, "plaintext coefficient >= t");
  }
  const RnsBase& base = ctx_->q_base();
  const auto u = sample_ternary(rng, n);
  const auto e1 = sample_error(rng, n);
  const auto e2 = sample_error(rng, n);
  Ciphertext c(*ctx_, 2);
  std::vector<uint64_t> u_k(n);
  for (size_t k = 0; k < L; ++k) {
    const Modulus& q = base[k];
    const NttTables& ntt = ctx_->key_ntt(k);
    for (size_t i = 0; i < n; ++i) u_k[i] = q.from_signed(u[i]);
    ntt.forward(u_k);
    uint64_t* c0 = c.limb(0, k);
    uint64_t* c1 = c.limb(1, k);
    const uint64_t* p0 = pk_.p0.data() + k * n;
    const uint64_t* p1 = pk_.p1.data() + k * n;
    for (size_t i = 0; i < n; ++i) {
      c0[i] = q.mul(p0[i], u_k[i]);
      c1[i] = q.mul(p1[i], u_k[i]);
    }
    ntt.inverse({c0, n});
    ntt.inverse({c1, n});
    const uint64_t delta = ctx_->delta(k);
    for (size_t i = 0; i < n; ++i) {
      c0[i] = q.add(c0[i], q.from_signed(e1[i]));
      c0[i] = q.add(c0[i], q.mul(delta, m.coeffs[i]));
      c1[i] = q.add(c1[i], q.from_signed(e2[i]));
    }
  }
  return c;
}

Decryptor::Decryptor(ContextPtr ctx, SecretKey sk)
    : ctx_(std::move(ctx)), sk_(std::move(sk)) {
  if (sk_.params_id != ctx_->params_id()) {
    fail(ErrorCode::kParamMismatch, "secret key from another parameter set");
  }
}

Plaintext Decryptor::decrypt(const Ciphertext& c) const {
  Plaintext out;
  if (decrypt_core(c, &out) <= 0) {
    fail(ErrorCode::kNoiseOverflow, "noise budget exhausted");
  }
  return out;
}

int Decryptor::noise_budget(const Ciphertext& c) const {
  return decrypt_core(c, nullptr);
}

int Decryptor::decrypt_core(const Ciphertext& c, Plaintext* out) const {
  if (c.params_id() != ctx_->params_id()) {
    fail(ErrorCode::kParamMismatch, "ciphertext from another parameter set");
  }
  if (c.is_ntt()) {
    fail(ErrorCode::kParamMismatch, "ciphertext must be in coefficient form");
  }
  const size_t n = ctx_->n();
  const size_t L = ctx_->q_size();
  const RnsBase& base = ctx_->q_base();

  // v = c0 + c1 s + c2 s^2 over q, coefficient form, L x N.
  std::vector<uint64_t> v(L * n);
  std::vector<uint64_t> tmp(n);
  for (size_t k = 0; k < L; ++k) {
    const Modulus& q = base[k];
    const NttTables& ntt = ctx_->key_ntt(k);
    const uint64_t* s = sk_.ntt.data() + k * n;
    uint64_t* acc = v.data() + k * n;
    std::fill(acc, acc + n, 0);
    for (size_t j = c.size() - 1; j >= 1; --j) {
      // Horner: acc = (acc + c_j) * s.
      std::copy(c.limb(j, k), c.limb(j, k) + n, tmp.begin());
      ntt.forward(tmp);
      for (size_t i = 0; i < n; ++i) {
        acc[i] = q.mul(q.add(acc[i], tmp[i]), s[i]);
      }
    }
    ntt.inverse({acc, n});
    const uint64_t* c0 = c.limb(0, k);
    for (size_t i = 0; i < n; ++i) acc[i] = q.add(acc[i], c0[i]);
  }

  const size_t ql = base.limbs();
  const Divider& div = ctx_->decrypt_divider();
  const std::vector<uint64_t>& half = ctx_->q_half();
  const uint64_t t = ctx_->plain_modulus().value();
  if (out) out->coeffs.assign(n, 0);
  int max_bits = 0;
  std::array<uint64_t, kMaxLimbs> x{};
  std::array<uint64_t, kMaxLimbs> y{};
  std::array<uint64_t, kMaxLimbs> quot{};
  std::array<uint64_t, kMaxLimbs> rem{};
  std::array<uint64_t, kMaxLimbs> mag{};
  for (size_t i = 0; i < n; ++i) {
    base.compose(v.data() + i, n, x.data());
    std::fill(y.begin(), y.begin() + ql + 1, 0);
    mp::addmul_word(y.data(), ql + 1, x.data(), ql, t);
    y[ql] += mp::add(y.data(), half.data(), ql);
    div.divide(y.data(), quot.data(), rem.data());
    if (out) out->coeffs[i] = quot[0] % t;
    // Residual t*v - m*q = rem - floor(q/2).
    if (mp::compare(rem.data(), half.data(), ql) >= 0) {
      mp::sub_into(mag.data(), rem.data(), half.data(), ql);
    } else {
      mp::sub_into(mag.data(), half.data(), rem.data(), ql);
    }
    max_bits = std::max(max_bits, mp::bit_length(mag.data(), ql));
  }
  return std::max(0, base.product_bits() - max_bits - 1);
}

}  // namespace hheml::bfv
