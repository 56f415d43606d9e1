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

#include "hheml/bfv/keygen.h"

#include <set>

#include "hheml/errors.h"
#include "sampling.h"

namespace hheml::bfv {

KeyGenerator::KeyGenerator(ContextPtr ctx, Prng rng)
    : ctx_(std::move(ctx)), rng_(std::move(rng)) {
  const size_t n = ctx_->n();
  const RnsBase& base = ctx_->key_base();
  sk_.params_id = ctx_->params_id();
  sk_.coeffs = sample_ternary(rng_, n);
  sk_.ntt.resize(base.size() * n);
  lift_small(sk_.coeffs, base, base.size(), sk_.ntt.data());
  for (size_t k = 0; k < base.size(); ++k) {
    ctx_->key_ntt(k).forward({sk_.ntt.data() + k * n, n});
  }
}

KeyGenerator::KeyGenerator(ContextPtr ctx, SecretKey sk, Prng rng)
    : ctx_(std::move(ctx)), rng_(std::move(rng)), sk_(std::move(sk)) {
  if (sk_.params_id != ctx_->params_id()) {
    fail(ErrorCode::kParamMismatch, "secret key from another parameter set");
  }
}

PublicKey KeyGenerator::create_public_key() {
  const size_t n = ctx_->n();
  const size_t L = ctx_->q_size();
  const RnsBase& base = ctx_->q_base();
  PublicKey pk;
  pk.params_id = ctx_->params_id();
  pk.p0.resize(L * n);
  pk.p1.resize(L * n);
  sample_uniform(rng_, base, L, n, pk.p1.data());
  const auto e = sample_error(rng_, n);
  lift_small(e, base, L, pk.p0.data());
  for (size_t k = 0; k < L; ++k) {
    const Modulus& q = base[k];
    uint64_t* p0 = pk.p0.data() + k * n;
    const uint64_t* a = pk.p1.data() + k * n;
    const uint64_t* s = sk_.ntt.data() + k * n;
    ctx_->key_ntt(k).forward({p0, n});
    for (size_t i = 0; i < n; ++i) {
      p0[i] = q.neg(q.add(q.mul(a[i], s[i]), p0[i]));
    }
  }
  return pk;
}

KSwitchKey KeyGenerator::make_kswitch(const std::vector<uint64_t>& target) {
  const size_t n = ctx_->n();
  const RnsBase& base = ctx_->key_base();
  const size_t K = base.size();
  const auto& digits = ctx_->digits();
  KSwitchKey key;
  key.data.resize(digits.size() * 2 * K * n);
  for (size_t d = 0; d < digits.size(); ++d) {
    uint64_t* k0 = key.data.data() + (2 * d) * K * n;
    uint64_t* k1 = k0 + K * n;
    sample_uniform(rng_, base, K, n, k1);
    const auto e = sample_error(rng_, n);
    lift_small(e, base, K, k0);
    const size_t prime = digits[d].prime;
    const Modulus& qi = base[prime];
    const uint64_t factor = qi.mul(ctx_->special_mod_q(prime),
                                   qi.pow(2, digits[d].shift));
    for (size_t k = 0; k < K; ++k) {
      const Modulus& q = base[k];
      uint64_t* r0 = k0 + k * n;
      const uint64_t* a = k1 + k * n;
      const uint64_t* s = sk_.ntt.data() + k * n;
      ctx_->key_ntt(k).forward({r0, n});
      for (size_t i = 0; i < n; ++i) {
        r0[i] = q.neg(q.add(q.mul(a[i], s[i]), r0[i]));
      }
      if (k == prime) {
        const uint64_t* tg = target.data() + k * n;
        for (size_t i = 0; i < n; ++i) {
          r0[i] = q.add(r0[i], q.mul(factor, tg[i]));
        }
      }
    }
  }
  return key;
}

RelinKey KeyGenerator::create_relin_key() {
  const size_t n = ctx_->n();
  const RnsBase& base = ctx_->key_base();
  std::vector<uint64_t> s2(sk_.ntt.size());
  for (size_t k = 0; k < base.size(); ++k) {
    for (size_t i = 0; i < n; ++i) {
      const uint64_t v = sk_.ntt[k * n + i];
      s2[k * n + i] = base[k].mul(v, v);
    }
  }
  RelinKey rk;
  rk.params_id = ctx_->params_id();
  rk.key = make_kswitch(s2);
  return rk;
}

GaloisKeys KeyGenerator::create_galois_keys(const std::vector<int64_t>& steps,
                                            bool row_swap) {
  std::set<uint32_t> elements;
  for (int64_t s : steps) {
    const uint32_t g = ctx_->galois_for_step(s);
    if (g != 1) elements.insert(g);
  }
  if (row_swap) elements.insert(ctx_->galois_row_swap());
  const size_t n = ctx_->n();
  const size_t K = ctx_->key_base().size();
  GaloisKeys gk;
  gk.params_id = ctx_->params_id();
  std::vector<uint64_t> target(K * n);
  for (uint32_t g : elements) {
    const auto perm = ctx_->galois_ntt_permutation(g);
    for (size_t k = 0; k < K; ++k) {
      const uint64_t* s = sk_.ntt.data() + k * n;
      uint64_t* t = target.data() + k * n;
      for (size_t i = 0; i < n; ++i) t[i] = s[perm[i]];
    }
    gk.keys.emplace(g, make_kswitch(target));
  }
  return gk;
}

GaloisKeys KeyGenerator::create_galois_keys() {
  return create_galois_keys(power_of_two_steps(ctx_->row_size()), true);
}

std::vector<int64_t> KeyGenerator::power_of_two_steps(size_t row_size) {
  std::vector<int64_t> steps;
  for (int64_t k = 1; size_t(k) < row_size; k <<= 1) {
    steps.push_back(k);
    steps.push_back(-k);
  }
  return steps;
}

KeySet he_keygen(const ContextPtr& ctx, Prng& rng,
                 const std::vector<int64_t>& steps) {
  Seed seed;
  rng.fill(seed);
  KeyGenerator gen(ctx, Prng(seed));
  KeySet keys;
  keys.sk = gen.secret_key();
  keys.pk = gen.create_public_key();
  keys.rk = gen.create_relin_key();
  keys.gk = steps.empty() ? gen.create_galois_keys()
                          : gen.create_galois_keys(steps, true);
  return keys;
}

}  // namespace hheml::bfv
