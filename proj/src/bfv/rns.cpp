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

#include "hheml/bfv/rns.h"

#include <array>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <stdexcept>

#include "hheml/bfv/bigint.h"

namespace hheml::bfv {

namespace {

using boost::multiprecision::cpp_int;

std::vector<uint64_t> to_limbs(const cpp_int& v, size_t n) {
  std::vector<uint64_t> out(n, 0);
  cpp_int x = v;
  for (size_t i = 0; i < n && x != 0; ++i) {
    out[i] = static_cast<uint64_t>(x & cpp_int(~uint64_t{0}));
    x >>= 64;
  }
  if (x != 0) throw std::logic_error("value exceeds limb count");
  return out;
}

cpp_int from_limbs(const std::vector<uint64_t>& v) {
  cpp_int x = 0;
  for (size_t i = v.size(); i-- > 0;) {
    x <<= 64;
    x += v[i];
  }
  return x;
}

size_t limbs_for(const cpp_int& v) {
  size_t bits = v == 0 ? 1 : size_t(msb(v)) + 1;
  return (bits + 63) / 64;
}

}  // namespace

RnsBase::RnsBase(const std::vector<uint64_t>& primes) {
  if (primes.empty()) throw std::invalid_argument("empty RNS base");
  cpp_int m = 1;
  for (uint64_t p : primes) {
    moduli_.emplace_back(p);
    m *= p;
  }
  limbs_ = limbs_for(m);
  if (limbs_ + 2 > kMaxLimbs) throw std::invalid_argument("RNS base too wide");
  product_bits_ = int(msb(m)) + 1;
  product_ = to_limbs(m, limbs_);
  half_ = to_limbs(m / 2, limbs_);
  for (const Modulus& q : moduli_) {
    const cpp_int punct = m / q.value();
    auto limbs = to_limbs(punct, limbs_);
    punctured_.insert(punctured_.end(), limbs.begin(), limbs.end());
    const uint64_t punct_mod = static_cast<uint64_t>(punct % q.value());
    inv_punctured_.emplace_back(q.inv(punct_mod), q.value());
    r64_.push_back(static_cast<uint64_t>((cpp_int(1) << 64) % q.value()));
  }
}

void RnsBase::compose(const uint64_t* residues, size_t stride,
                      uint64_t* out) const {
  const size_t n = limbs_ + 1;
  std::array<uint64_t, kMaxLimbs> acc{};
  long double frac = 0;
  for (size_t k = 0; k < moduli_.size(); ++k) {
    const uint64_t q = moduli_[k].value();
    const uint64_t y = inv_punctured_[k].mul(residues[k * stride], q);
    mp::addmul_word(acc.data(), n, punctured_.data() + k * limbs_, limbs_, y);
    frac += static_cast<long double>(y) / static_cast<long double>(q);
  }
  // acc = x + alpha * M with alpha = floor(frac) up to rounding error.
  uint64_t alpha = static_cast<uint64_t>(std::floor(frac));
  std::array<uint64_t, kMaxLimbs> sub{};
  if (alpha > 0) {
    mp::addmul_word(sub.data(), n, product_.data(), limbs_, alpha);
    if (mp::compare(acc.data(), sub.data(), n) < 0) {
      std::array<uint64_t, kMaxLimbs> m_ext{};
      for (size_t i = 0; i < limbs_; ++i) m_ext[i] = product_[i];
      mp::sub(sub.data(), m_ext.data(), n);
    }
    mp::sub(acc.data(), sub.data(), n);
  }
  std::array<uint64_t, kMaxLimbs> m_ext{};
  for (size_t i = 0; i < limbs_; ++i) m_ext[i] = product_[i];
  while (mp::compare(acc.data(), m_ext.data(), n) >= 0) {
    mp::sub(acc.data(), m_ext.data(), n);
  }
  for (size_t i = 0; i < limbs_; ++i) out[i] = acc[i];
}

void RnsBase::decompose(const uint64_t* x, size_t n, uint64_t* out,
                        size_t stride) const {
  for (size_t k = 0; k < moduli_.size(); ++k) {
    out[k * stride] = mp::mod_word(x, n, moduli_[k], r64_[k]);
  }
}

void RnsBase::decompose_centered(const uint64_t* x, const RnsBase& from,
                                 uint64_t* out, size_t stride) const {
  const size_t n = from.limbs();
  if (mp::compare(x, from.half_product().data(), n) <= 0) {
    decompose(x, n, out, stride);
    return;
  }
  std::array<uint64_t, kMaxLimbs> diff{};
  mp::sub_into(diff.data(), from.product().data(), x, n);
  for (size_t k = 0; k < moduli_.size(); ++k) {
    out[k * stride] =
        moduli_[k].neg(mp::mod_word(diff.data(), n, moduli_[k], r64_[k]));
  }
}

Divider::Divider(const std::vector<uint64_t>& divisor, size_t x_limbs)
    : divisor_(divisor), x_limbs_(x_limbs) {
  d_limbs_ = divisor.size();
  while (d_limbs_ > 0 && divisor_[d_limbs_ - 1] == 0) --d_limbs_;
  if (d_limbs_ == 0 || x_limbs < d_limbs_) {
    throw std::invalid_argument("bad divider shape");
  }
  divisor_.resize(d_limbs_);
  const cpp_int d = from_limbs(divisor_);
  const cpp_int mu = (cpp_int(1) << (64 * x_limbs)) / d;
  reciprocal_ = to_limbs(mu, limbs_for(mu));
  if (x_limbs_ + reciprocal_.size() + 1 > 2 * kMaxLimbs) {
    throw std::invalid_argument("divider too wide");
  }
}

void Divider::divide(const uint64_t* x, uint64_t* quotient,
                     uint64_t* remainder) const {
  const size_t nm = reciprocal_.size();
  std::array<uint64_t, 2 * kMaxLimbs> prod{};
  const size_t np = x_limbs_ + nm;
  for (size_t i = 0; i < nm; ++i) {
    if (reciprocal_[i]) {
      mp::addmul_word(prod.data() + i, np - i, x, x_limbs_, reciprocal_[i]);
    }
  }
  // Estimate qhat = floor(x * mu / 2^(64 * x_limbs)) <= floor(x / d) <= qhat + 2.
  const uint64_t* qhat = prod.data() + x_limbs_;
  const size_t nq = quotient_limbs();
  std::array<uint64_t, kMaxLimbs> q{};
  for (size_t i = 0; i < nq && i < nm; ++i) q[i] = qhat[i];

  // r = x - qhat * d, computed modulo 2^(64 * (d_limbs + 1)).
  const size_t nr = d_limbs_ + 1;
  std::array<uint64_t, kMaxLimbs + 1> qd{};
  for (size_t i = 0; i < nq && i < nr; ++i) {
    if (q[i]) {
      mp::addmul_word(qd.data() + i, nr - i, divisor_.data(),
                      std::min(d_limbs_, nr - i), q[i]);
    }
  }
  std::array<uint64_t, kMaxLimbs + 1> r{};
  for (size_t i = 0; i < nr && i < x_limbs_; ++i) r[i] = x[i];
  mp::sub(r.data(), qd.data(), nr);
  std::array<uint64_t, kMaxLimbs + 1> d_ext{};
  for (size_t i = 0; i < d_limbs_; ++i) d_ext[i] = divisor_[i];
  while (mp::compare(r.data(), d_ext.data(), nr) >= 0) {
    mp::sub(r.data(), d_ext.data(), nr);
    for (size_t i = 0; i < nq; ++i) {
      if (++q[i] != 0) break;
    }
  }
  for (size_t i = 0; i < nq; ++i) quotient[i] = q[i];
  for (size_t i = 0; i < d_limbs_; ++i) remainder[i] = r[i];
}

}  // namespace hheml::bfv
