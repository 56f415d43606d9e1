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

#include "hheml/bfv/context.h"

#include <boost/multiprecision/cpp_int.hpp>
#include <stdexcept>

#include "hheml/errors.h"

namespace hheml::bfv {

namespace {

using boost::multiprecision::cpp_int;

std::vector<uint64_t> limbs_of(const cpp_int& v, size_t n) {
  std::vector<uint64_t> out(n, 0);
  cpp_int x = v;
  for (size_t i = 0; i < n; ++i) {
    out[i] = static_cast<uint64_t>(x & cpp_int(~uint64_t{0}));
    x >>= 64;
  }
  return out;
}

}  // namespace

std::shared_ptr<const BfvContext> BfvContext::create(const BfvParams& params) {
  params.validate();
  return std::shared_ptr<const BfvContext>(new BfvContext(params));
}

BfvContext::BfvContext(const BfvParams& params)
    : params_(params), params_id_(params.id()), plain_(params.plain_modulus) {
  const size_t n = params_.n;
  const size_t L = params_.q.size();

  std::vector<uint64_t> key_primes = params_.q;
  key_primes.push_back(params_.special_prime);
  std::vector<uint64_t> ext_primes = params_.q;
  const auto extra = find_ntt_primes(60, 2 * n, L + 1, key_primes);
  ext_primes.insert(ext_primes.end(), extra.begin(), extra.end());

  q_base_ = RnsBase(params_.q);
  key_base_ = RnsBase(key_primes);
  ext_base_ = RnsBase(ext_primes);
  aux_base_ = RnsBase(extra);

  for (size_t i = 0; i < key_base_.size(); ++i) {
    key_ntt_.push_back(std::make_shared<NttTables>(n, key_base_[i]));
  }
  for (size_t i = 0; i < ext_base_.size(); ++i) {
    if (i < L) {
      ext_ntt_.push_back(key_ntt_[i]);
    } else {
      ext_ntt_.push_back(std::make_shared<NttTables>(n, ext_base_[i]));
    }
  }
  plain_ntt_ = std::make_unique<NttTables>(n, plain_);

  cpp_int q = 1;
  for (uint64_t v : params_.q) q *= v;
  const cpp_int delta = q / params_.plain_modulus;
  for (size_t i = 0; i < L; ++i) {
    delta_.push_back(static_cast<uint64_t>(delta % params_.q[i]));
  }
  const size_t ql = q_base_.limbs();
  q_half_ = limbs_of(q / 2, ql);
  scale_div_ = Divider(q_base_.product(), ext_base_.limbs() + 1);
  decrypt_div_ = Divider(q_base_.product(), ql + 1);

  for (size_t i = 0; i < L; ++i) {
    const Modulus& qi = q_base_[i];
    const uint64_t pm = qi.reduce(params_.special_prime);
    p_mod_q_.push_back(pm);
    p_inv_mod_q_.emplace_back(qi.inv(pm), qi.value());
  }

  for (size_t i = 0; i < L; ++i) {
    const size_t count = params_.digits_per_prime(i);
    for (size_t j = 0; j < count; ++j) {
      digits_.push_back(
          {i, j * size_t(params_.decomp_base_log), count == 1});
    }
  }

  const int log_n = __builtin_ctzll(n);
  const uint64_t two_n = 2 * n;
  slot_index_.resize(n);
  uint64_t e = 1;
  for (size_t j = 0; j < n / 2; ++j) {
    slot_index_[j] = reverse_bits(uint32_t((e - 1) / 2), log_n);
    slot_index_[j + n / 2] = reverse_bits(uint32_t((two_n - e - 1) / 2), log_n);
    e = (e * 3) % two_n;
  }
}

uint32_t BfvContext::galois_for_step(int64_t step) const {
  const int64_t r = int64_t(row_size());
  const int64_t k = ((step % r) + r) % r;
  const uint64_t two_n = 2 * n();
  uint64_t g = 1;
  for (int64_t i = 0; i < k; ++i) g = (g * 3) % two_n;
  return uint32_t(g);
}

void BfvContext::apply_galois(std::span<const uint64_t> in, uint32_t g,
                              const Modulus& q, std::span<uint64_t> out) const {
  const size_t nn = n();
  const uint64_t mask = 2 * nn - 1;
  uint64_t idx = 0;
  for (size_t i = 0; i < nn; ++i) {
    if (idx < nn) {
      out[idx] = in[i];
    } else {
      out[idx - nn] = q.neg(in[i]);
    }
    idx = (idx + g) & mask;
  }
}

std::vector<uint32_t> BfvContext::galois_ntt_permutation(uint32_t g) const {
  const size_t nn = n();
  const int log_n = __builtin_ctzll(nn);
  const uint64_t mask = 2 * nn - 1;
  std::vector<uint32_t> perm(nn);
  for (size_t i = 0; i < nn; ++i) {
    const uint64_t e = 2 * uint64_t(reverse_bits(uint32_t(i), log_n)) + 1;
    const uint64_t mapped = (e * g) & mask;
    perm[i] = reverse_bits(uint32_t((mapped - 1) / 2), log_n);
  }
  return perm;
}

}  // namespace hheml::bfv
