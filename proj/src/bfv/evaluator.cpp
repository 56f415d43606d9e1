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

#include "hheml/bfv/evaluator.h"

#include <algorithm>
#include <array>
#include <string>

#include "hheml/bfv/bigint.h"
#include "hheml/errors.h"

namespace hheml::bfv {

void Evaluator::check(const Ciphertext& a) const {
  if (a.params_id() != ctx_->params_id()) {
    fail(ErrorCode::kParamMismatch, "ciphertext from another parameter set");
  }
  if (a.size() < 2) fail(ErrorCode::kParamMismatch, "empty ciphertext");
}

void Evaluator::check_pair(const Ciphertext& a, const Ciphertext& b) const {
  check(a);
  check(b);
  if (a.is_ntt() != b.is_ntt()) {
    fail(ErrorCode::kParamMismatch, "operands in different domains");
  }
}

void Evaluator::add_inplace(Ciphertext& a, const Ciphertext& b) const {
  check_pair(a, b);
  const size_t n = ctx_->n();
  const size_t L = ctx_->q_size();
  if (b.size() > a.size()) a.resize(b.size());
  for (size_t j = 0; j < b.size(); ++j) {
    for (size_t k = 0; k < L; ++k) {
      const Modulus& q = ctx_->q_base()[k];
      uint64_t* x = a.limb(j, k);
      const uint64_t* y = b.limb(j, k);
      for (size_t i = 0; i < n; ++i) x[i] = q.add(x[i], y[i]);
    }
  }
}

void Evaluator::sub_inplace(Ciphertext& a, const Ciphertext& b) const {
  check_pair(a, b);
  const size_t n = ctx_->n();
  const size_t L = ctx_->q_size();
  if (b.size() > a.size()) a.resize(b.size());
  for (size_t j = 0; j < b.size(); ++j) {
    for (size_t k = 0; k < L; ++k) {
      const Modulus& q = ctx_->q_base()[k];
      uint64_t* x = a.limb(j, k);
      const uint64_t* y = b.limb(j, k);
      for (size_t i = 0; i < n; ++i) x[i] = q.sub(x[i], y[i]);
    }
  }
}

Ciphertext Evaluator::add(const Ciphertext& a, const Ciphertext& b) const {
  Ciphertext out = a;
  add_inplace(out, b);
  return out;
}

Ciphertext Evaluator::sub(const Ciphertext& a, const Ciphertext& b) const {
  Ciphertext out = a;
  sub_inplace(out, b);
  return out;
}

Ciphertext Evaluator::negate(const Ciphertext& a) const {
  check(a);
  Ciphertext out = a;
  const size_t n = ctx_->n();
  for (size_t j = 0; j < a.size(); ++j) {
    for (size_t k = 0; k < ctx_->q_size(); ++k) {
      const Modulus& q = ctx_->q_base()[k];
      uint64_t* x = out.limb(j, k);
      for (size_t i = 0; i < n; ++i) x[i] = q.neg(x[i]);
    }
  }
  return out;
}

Ciphertext Evaluator::mul_scalar(const Ciphertext& a, uint64_t scalar) const {
  check(a);
  const uint64_t t = ctx_->plain_modulus().value();
  scalar %= t;
  const int64_t centered = scalar > t / 2 ? int64_t(scalar) - int64_t(t)
                                          : int64_t(scalar);
  Ciphertext out = a;
  const size_t n = ctx_->n();
  for (size_t k = 0; k < ctx_->q_size(); ++k) {
    const Modulus& q = ctx_->q_base()[k];
    const ShoupMul s(q.from_signed(centered), q.value());
    for (size_t j = 0; j < a.size(); ++j) {
      uint64_t* x = out.limb(j, k);
      for (size_t i = 0; i < n; ++i) x[i] = s.mul(x[i], q.value());
    }
  }
  return out;
}

namespace {

void check_plain(const BfvContext& ctx, const Plaintext& p) {
  if (p.coeffs.size() != ctx.n()) {
    fail(ErrorCode::kLengthMismatch, "plaintext has wrong degree");
  }
  for (uint64_t v : p.coeffs) {
    if (v >= ctx.plain_modulus().value()) {
      fail(ErrorCode::kSlotOverflow, "plaintext coefficient >= t");
    }
  }
}

}  // namespace

Ciphertext Evaluator::add_plain(const Ciphertext& a, const Plaintext& p) const {
  check(a);
  check_plain(*ctx_, p);
  if (a.is_ntt()) fail(ErrorCode::kParamMismatch, "expected coefficient form");
  Ciphertext out = a;
  const size_t n = ctx_->n();
  for (size_t k = 0; k < ctx_->q_size(); ++k) {
    const Modulus& q = ctx_->q_base()[k];
    const uint64_t delta = ctx_->delta(k);
    uint64_t* x = out.limb(0, k);
    for (size_t i = 0; i < n; ++i) x[i] = q.add(x[i], q.mul(delta, p.coeffs[i]));
  }
  return out;
}

Ciphertext Evaluator::sub_plain(const Ciphertext& a, const Plaintext& p) const {
  check(a);
  check_plain(*ctx_, p);
  if (a.is_ntt()) fail(ErrorCode::kParamMismatch, "expected coefficient form");
  Ciphertext out = a;
  const size_t n = ctx_->n();
  for (size_t k = 0; k < ctx_->q_size(); ++k) {
    const Modulus& q = ctx_->q_base()[k];
    const uint64_t delta = ctx_->delta(k);
    uint64_t* x = out.limb(0, k);
    for (size_t i = 0; i < n; ++i) x[i] = q.sub(x[i], q.mul(delta, p.coeffs[i]));
  }
  return out;
}

PlainNtt Evaluator::prepare(const Plaintext& p) const {
  check_plain(*ctx_, p);
  const size_t n = ctx_->n();
  const size_t L = ctx_->q_size();
  const uint64_t t = ctx_->plain_modulus().value();
  PlainNtt out;
  out.params_id = ctx_->params_id();
  out.data.resize(L * n);
  for (size_t k = 0; k < L; ++k) {
    const Modulus& q = ctx_->q_base()[k];
    uint64_t* row = out.data.data() + k * n;
    for (size_t i = 0; i < n; ++i) {
      const uint64_t v = p.coeffs[i];
      row[i] = v > t / 2 ? q.sub(0, t - v) : v;
    }
    ctx_->key_ntt(k).forward({row, n});
  }
  return out;
}

void Evaluator::to_ntt(Ciphertext& a) const {
  check(a);
  if (a.is_ntt()) return;
  for (size_t j = 0; j < a.size(); ++j) {
    for (size_t k = 0; k < ctx_->q_size(); ++k) {
      ctx_->key_ntt(k).forward(a.limb_span(j, k));
    }
  }
  a.set_ntt(true);
}

void Evaluator::from_ntt(Ciphertext& a) const {
  check(a);
  if (!a.is_ntt()) return;
  for (size_t j = 0; j < a.size(); ++j) {
    for (size_t k = 0; k < ctx_->q_size(); ++k) {
      ctx_->key_ntt(k).inverse(a.limb_span(j, k));
    }
  }
  a.set_ntt(false);
}

Ciphertext Evaluator::mul_plain(const Ciphertext& a, const PlainNtt& p) const {
  check(a);
  if (p.params_id != ctx_->params_id()) {
    fail(ErrorCode::kParamMismatch, "plaintext from another parameter set");
  }
  Ciphertext out = a;
  const bool coeff = !a.is_ntt();
  if (coeff) to_ntt(out);
  const size_t n = ctx_->n();
  for (size_t j = 0; j < out.size(); ++j) {
    for (size_t k = 0; k < ctx_->q_size(); ++k) {
      const Modulus& q = ctx_->q_base()[k];
      uint64_t* x = out.limb(j, k);
      const uint64_t* y = p.data.data() + k * n;
      for (size_t i = 0; i < n; ++i) x[i] = q.mul(x[i], y[i]);
    }
  }
  if (coeff) from_ntt(out);
  return out;
}

Ciphertext Evaluator::mul_plain(const Ciphertext& a, const Plaintext& p) const {
  return mul_plain(a, prepare(p));
}

void Evaluator::mul_plain_accumulate(Ciphertext& acc, const Ciphertext& a,
                                     const PlainNtt& p) const {
  check(a);
  if (!a.is_ntt()) fail(ErrorCode::kParamMismatch, "expected NTT form");
  if (p.params_id != ctx_->params_id()) {
    fail(ErrorCode::kParamMismatch, "plaintext from another parameter set");
  }
  const size_t n = ctx_->n();
  if (acc.size() == 0) {
    acc = Ciphertext(*ctx_, a.size());
    acc.set_ntt(true);
  }
  check_pair(acc, a);
  for (size_t j = 0; j < a.size(); ++j) {
    for (size_t k = 0; k < ctx_->q_size(); ++k) {
      const Modulus& q = ctx_->q_base()[k];
      uint64_t* x = acc.limb(j, k);
      const uint64_t* y = a.limb(j, k);
      const uint64_t* w = p.data.data() + k * n;
      for (size_t i = 0; i < n; ++i) x[i] = q.add(x[i], q.mul(y[i], w[i]));
    }
  }
}

void Evaluator::extend_to_ntt(const uint64_t* poly, uint64_t* out) const {
  const size_t n = ctx_->n();
  const size_t L = ctx_->q_size();
  const RnsBase& qb = ctx_->q_base();
  const RnsBase& eb = ctx_->ext_base();
  std::copy(poly, poly + L * n, out);
  // The auxiliary primes receive the centered lift.
  const RnsBase& aux = ctx_->aux_base();
  std::array<uint64_t, kMaxLimbs> x{};
  uint64_t* ext = out + L * n;
  for (size_t i = 0; i < n; ++i) {
    qb.compose(poly + i, n, x.data());
    aux.decompose_centered(x.data(), qb, ext + i, n);
  }
  for (size_t k = 0; k < eb.size(); ++k) {
    ctx_->ext_ntt(k).forward({out + k * n, n});
  }
}

Ciphertext Evaluator::multiply(const Ciphertext& a, const Ciphertext& b) const {
  check_pair(a, b);
  if (a.size() != 2 || b.size() != 2) {
    fail(ErrorCode::kParamMismatch, "multiply expects size-2 operands");
  }
  if (a.is_ntt()) fail(ErrorCode::kParamMismatch, "expected coefficient form");
  const size_t n = ctx_->n();
  const size_t L = ctx_->q_size();
  const RnsBase& eb = ctx_->ext_base();
  const size_t E = eb.size();
  const size_t plen = E * n;

  std::vector<uint64_t> buf(7 * plen);
  uint64_t* a0 = buf.data();
  uint64_t* a1 = a0 + plen;
  uint64_t* b0 = a1 + plen;
  uint64_t* b1 = b0 + plen;
  uint64_t* e0 = b1 + plen;
  uint64_t* e1 = e0 + plen;
  uint64_t* e2 = e1 + plen;
  extend_to_ntt(a.poly(0), a0);
  extend_to_ntt(a.poly(1), a1);
  if (&a == &b) {
    std::copy(a0, a0 + 2 * plen, b0);
  } else {
    extend_to_ntt(b.poly(0), b0);
    extend_to_ntt(b.poly(1), b1);
  }
  for (size_t k = 0; k < E; ++k) {
    const Modulus& q = eb[k];
    const size_t off = k * n;
    for (size_t i = off; i < off + n; ++i) {
      e0[i] = q.mul(a0[i], b0[i]);
      e1[i] = q.reduce128(u128(a0[i]) * b1[i] + u128(a1[i]) * b0[i]);
      e2[i] = q.mul(a1[i], b1[i]);
    }
    ctx_->ext_ntt(k).inverse({e0 + off, n});
    ctx_->ext_ntt(k).inverse({e1 + off, n});
    ctx_->ext_ntt(k).inverse({e2 + off, n});
  }

  // Scale each coefficient by t/q with rounding, back into q.
  Ciphertext out(*ctx_, 3);
  const RnsBase& qb = ctx_->q_base();
  const size_t xl = eb.limbs();
  const Divider& div = ctx_->scale_divider();
  const uint64_t t = ctx_->plain_modulus().value();
  const std::vector<uint64_t>& half_q = ctx_->q_half();
  std::array<uint64_t, kMaxLimbs> x{};
  std::array<uint64_t, kMaxLimbs> y{};
  std::array<uint64_t, kMaxLimbs> quot{};
  std::array<uint64_t, kMaxLimbs> rem{};
  const size_t nq = div.quotient_limbs();
  uint64_t* polys[3] = {e0, e1, e2};
  for (size_t j = 0; j < 3; ++j) {
    for (size_t i = 0; i < n; ++i) {
      eb.compose(polys[j] + i, n, x.data());
      const bool negative =
          mp::compare(x.data(), eb.half_product().data(), xl) > 0;
      if (negative) {
        std::array<uint64_t, kMaxLimbs> tmp{};
        mp::sub_into(tmp.data(), eb.product().data(), x.data(), xl);
        x = tmp;
      }
      std::fill(y.begin(), y.begin() + xl + 1, 0);
      mp::addmul_word(y.data(), xl + 1, x.data(), xl, t);
      std::array<uint64_t, kMaxLimbs> h{};
      std::copy(half_q.begin(), half_q.end(), h.begin());
      mp::add(y.data(), h.data(), xl + 1);
      div.divide(y.data(), quot.data(), rem.data());
      uint64_t* dst = out.poly(j) + i;
      qb.decompose(quot.data(), nq, dst, n);
      if (negative) {
        for (size_t k = 0; k < L; ++k) dst[k * n] = qb[k].neg(dst[k * n]);
      }
    }
  }
  return out;
}

const KSwitchKey& Evaluator::galois_key(const GaloisKeys& gk,
                                        uint32_t g) const {
  if (gk.params_id != ctx_->params_id()) {
    fail(ErrorCode::kParamMismatch, "Galois keys from another parameter set");
  }
  auto it = gk.keys.find(g);
  if (it == gk.keys.end()) {
    fail(ErrorCode::kMissingEvalKey,
         "no Galois key for element " + std::to_string(g));
  }
  return it->second;
}

std::vector<uint64_t> Evaluator::decompose(const uint64_t* poly) const {
  const size_t n = ctx_->n();
  const RnsBase& kb = ctx_->key_base();
  const size_t K = kb.size();
  const auto& digits = ctx_->digits();
  std::vector<uint64_t> out(digits.size() * K * n);
  const int w = ctx_->params().decomp_base_log;
  const uint64_t mask = w >= 64 ? ~uint64_t{0} : (uint64_t{1} << w) - 1;
  for (size_t d = 0; d < digits.size(); ++d) {
    const auto& dg = digits[d];
    const uint64_t* src = poly + dg.prime * n;
    for (size_t k = 0; k < K; ++k) {
      uint64_t* row = out.data() + (d * K + k) * n;
      const Modulus& m = kb[k];
      if (dg.whole) {
        if (k == dg.prime) {
          std::copy(src, src + n, row);
        } else {
          for (size_t i = 0; i < n; ++i) row[i] = m.reduce(src[i]);
        }
      } else {
        for (size_t i = 0; i < n; ++i) {
          row[i] = m.reduce((src[i] >> dg.shift) & mask);
        }
      }
      ctx_->key_ntt(k).forward({row, n});
    }
  }
  return out;
}

void Evaluator::key_switch(const std::vector<uint64_t>& digits,
                           const uint32_t* perm, const KSwitchKey& key,
                           uint64_t* out0, uint64_t* out1) const {
  const size_t n = ctx_->n();
  const RnsBase& kb = ctx_->key_base();
  const size_t K = kb.size();
  const size_t L = K - 1;
  const size_t D = ctx_->digits().size();
  if (key.data.size() != D * 2 * K * n) {
    fail(ErrorCode::kParamMismatch, "key-switching key has wrong shape");
  }
  std::vector<uint64_t> acc(2 * K * n);
  std::vector<uint64_t> gathered(n);
  for (size_t k = 0; k < K; ++k) {
    const Modulus& m = kb[k];
    // Lazy reduction: each product is below 2^(2 * bits), the reduction
    // accepts sums below 2^124.
    const int spare = 124 - 2 * m.bit_count();
    const size_t batch = spare >= 20 ? (size_t{1} << 20)
                                     : std::max<size_t>(1, size_t{1} << spare);
    std::vector<u128> s0(n, 0), s1(n, 0);
    size_t pending = 0;
    for (size_t d = 0; d < D; ++d) {
      const uint64_t* dig = digits.data() + (d * K + k) * n;
      if (perm) {
        for (size_t i = 0; i < n; ++i) gathered[i] = dig[perm[i]];
        dig = gathered.data();
      }
      const uint64_t* k0 = key.data.data() + ((2 * d) * K + k) * n;
      const uint64_t* k1 = key.data.data() + ((2 * d + 1) * K + k) * n;
      for (size_t i = 0; i < n; ++i) {
        s0[i] += u128(dig[i]) * k0[i];
        s1[i] += u128(dig[i]) * k1[i];
      }
      if (++pending == batch) {
        for (size_t i = 0; i < n; ++i) {
          s0[i] = m.reduce128(s0[i]);
          s1[i] = m.reduce128(s1[i]);
        }
        pending = 0;
      }
    }
    uint64_t* a0 = acc.data() + k * n;
    uint64_t* a1 = acc.data() + (K + k) * n;
    for (size_t i = 0; i < n; ++i) {
      a0[i] = m.reduce128(s0[i]);
      a1[i] = m.reduce128(s1[i]);
    }
    ctx_->key_ntt(k).inverse({a0, n});
    ctx_->key_ntt(k).inverse({a1, n});
  }
  // Divide by P with rounding: subtract the centered P residue, multiply by
  // P^{-1} mod q_j.
  const uint64_t P = kb[L].value();
  const uint64_t half_p = P / 2;
  for (size_t c = 0; c < 2; ++c) {
    const uint64_t* ap = acc.data() + (c * K + L) * n;
    uint64_t* dst = c == 0 ? out0 : out1;
    for (size_t j = 0; j < L; ++j) {
      const Modulus& q = kb[j];
      const uint64_t pm = ctx_->special_mod_q(j);
      const ShoupMul& pinv = ctx_->special_inv_mod_q(j);
      const uint64_t* aj = acc.data() + (c * K + j) * n;
      uint64_t* o = dst + j * n;
      for (size_t i = 0; i < n; ++i) {
        uint64_t r = q.reduce(ap[i]);
        if (ap[i] > half_p) r = q.sub(r, pm);
        o[i] = pinv.mul(q.sub(aj[i], r), q.value());
      }
    }
  }
}

Ciphertext Evaluator::relinearize(const Ciphertext& a,
                                  const RelinKey& rk) const {
  check(a);
  if (a.size() == 2) return a;
  if (a.size() != 3) fail(ErrorCode::kParamMismatch, "unexpected size");
  if (a.is_ntt()) fail(ErrorCode::kParamMismatch, "expected coefficient form");
  if (rk.empty()) fail(ErrorCode::kMissingEvalKey, "no relinearization key");
  if (rk.params_id != ctx_->params_id()) {
    fail(ErrorCode::kParamMismatch, "relinearization key from another set");
  }
  const size_t n = ctx_->n();
  const size_t L = ctx_->q_size();
  std::vector<uint64_t> k0(L * n), k1(L * n);
  key_switch(decompose(a.poly(2)), nullptr, rk.key, k0.data(), k1.data());
  Ciphertext out(*ctx_, 2);
  for (size_t k = 0; k < L; ++k) {
    const Modulus& q = ctx_->q_base()[k];
    for (size_t i = 0; i < n; ++i) {
      out.limb(0, k)[i] = q.add(a.limb(0, k)[i], k0[k * n + i]);
      out.limb(1, k)[i] = q.add(a.limb(1, k)[i], k1[k * n + i]);
    }
  }
  return out;
}

Ciphertext Evaluator::mul_relin(const Ciphertext& a, const Ciphertext& b,
                                const RelinKey& rk) const {
  if (rk.empty()) fail(ErrorCode::kMissingEvalKey, "no relinearization key");
  return relinearize(multiply(a, b), rk);
}

Ciphertext Evaluator::square_relin(const Ciphertext& a,
                                   const RelinKey& rk) const {
  return mul_relin(a, a, rk);
}

Ciphertext Evaluator::apply_galois(const Ciphertext& a, uint32_t g,
                                   const GaloisKeys& gk) const {
  check(a);
  if (a.size() != 2) fail(ErrorCode::kParamMismatch, "relinearize first");
  if (a.is_ntt()) fail(ErrorCode::kParamMismatch, "expected coefficient form");
  const KSwitchKey& key = galois_key(gk, g);
  const size_t n = ctx_->n();
  const size_t L = ctx_->q_size();
  std::vector<uint64_t> rotated(L * n);
  for (size_t k = 0; k < L; ++k) {
    ctx_->apply_galois({a.limb(1, k), n}, g, ctx_->q_base()[k],
                       {rotated.data() + k * n, n});
  }
  Ciphertext res(*ctx_, 2);
  std::vector<uint64_t> k0(L * n);
  key_switch(decompose(rotated.data()), nullptr, key, k0.data(), res.poly(1));
  for (size_t k = 0; k < L; ++k) {
    const Modulus& q = ctx_->q_base()[k];
    uint64_t* c0 = res.limb(0, k);
    ctx_->apply_galois({a.limb(0, k), n}, g, q, {c0, n});
    for (size_t i = 0; i < n; ++i) c0[i] = q.add(c0[i], k0[k * n + i]);
  }
  return res;
}

Ciphertext Evaluator::rotate_rows(const Ciphertext& a, int64_t step,
                                  const GaloisKeys& gk) const {
  const uint32_t g = ctx_->galois_for_step(step);
  if (g == 1) {
    check(a);
    return a;
  }
  return apply_galois(a, g, gk);
}

Ciphertext Evaluator::swap_rows(const Ciphertext& a,
                                const GaloisKeys& gk) const {
  return apply_galois(a, ctx_->galois_row_swap(), gk);
}

std::vector<Ciphertext> Evaluator::rotate_many(
    const Ciphertext& a, const std::vector<int64_t>& steps,
    const GaloisKeys& gk) const {
  check(a);
  if (a.size() != 2) fail(ErrorCode::kParamMismatch, "relinearize first");
  if (a.is_ntt()) fail(ErrorCode::kParamMismatch, "expected coefficient form");
  const size_t n = ctx_->n();
  const size_t L = ctx_->q_size();
  std::vector<Ciphertext> out;
  out.reserve(steps.size());
  std::vector<uint64_t> digits;
  std::vector<uint64_t> k0(L * n);
  for (int64_t step : steps) {
    const uint32_t g = ctx_->galois_for_step(step);
    if (g == 1) {
      out.push_back(a);
      continue;
    }
    const KSwitchKey& key = galois_key(gk, g);
    if (digits.empty()) digits = decompose(a.poly(1));
    const auto perm = ctx_->galois_ntt_permutation(g);
    Ciphertext res(*ctx_, 2);
    key_switch(digits, perm.data(), key, k0.data(), res.poly(1));
    for (size_t k = 0; k < L; ++k) {
      const Modulus& q = ctx_->q_base()[k];
      uint64_t* c0 = res.limb(0, k);
      ctx_->apply_galois({a.limb(0, k), n}, g, q, {c0, n});
      for (size_t i = 0; i < n; ++i) c0[i] = q.add(c0[i], k0[k * n + i]);
    }
    out.push_back(std::move(res));
  }
  return out;
}

}  // namespace hheml::bfv
