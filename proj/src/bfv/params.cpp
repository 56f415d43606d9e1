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

#include "hheml/bfv/params.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

#include "hheml/bfv/modarith.h"
#include "hheml/errors.h"
#include "hheml/random.h"

namespace hheml::bfv {

namespace {

struct PresetShape {
  size_t n;
  int prime_bits;
  size_t count;
  int depth;
};

PresetShape shape_of(Preset p) {
  switch (p) {
    case Preset::kMicro:
      return {64, 60, 4, 8};
    case Preset::kToy:
      return {4096, 60, 6, 8};
    case Preset::kDefault:
      return {16384, 60, 6, 8};
    case Preset::kCustom:
      break;
  }
  fail(ErrorCode::kUnsupportedParams, "no shape for custom preset");
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(uint8_t(v >> (8 * i)));
}

}  // namespace

std::string_view preset_name(Preset p) {
  switch (p) {
    case Preset::kMicro:
      return "micro";
    case Preset::kToy:
      return "toy";
    case Preset::kDefault:
      return "default";
    case Preset::kCustom:
      return "custom";
  }
  return "unknown";
}

Preset parse_preset(std::string_view name) {
  if (name == "micro") return Preset::kMicro;
  if (name == "toy") return Preset::kToy;
  if (name == "default") return Preset::kDefault;
  fail(ErrorCode::kUnsupportedParams,
       "unknown preset '" + std::string(name) + "'");
}

BfvParams BfvParams::from_preset(Preset p) {
  const PresetShape s = shape_of(p);
  return generate(p, s.n, s.prime_bits, s.count);
}

BfvParams BfvParams::generate(Preset tag, size_t n, int prime_bits,
                              size_t count, int decomp_base_log) {
  if (n < 64 || (n & (n - 1)) != 0 || n > 32768) {
    fail(ErrorCode::kUnsupportedParams, "ring degree must be a power of two");
  }
  if (count == 0 || prime_bits < 30 || prime_bits > 60) {
    fail(ErrorCode::kUnsupportedParams, "bad prime layout");
  }
  BfvParams p;
  p.preset = tag;
  p.n = n;
  auto primes = find_ntt_primes(prime_bits, 2 * n, count + 1);
  p.special_prime = primes.front();
  p.q.assign(primes.begin() + 1, primes.end());
  p.decomp_base_log = decomp_base_log;
  p.validate();
  return p;
}

int BfvParams::supported_depth() const {
  if (preset == Preset::kCustom) return 0;
  return shape_of(preset).depth;
}

int BfvParams::q_bits() const {
  double bits = 0;
  for (uint64_t v : q) bits += std::log2(double(v));
  return int(bits) + 1;
}

size_t BfvParams::digits_per_prime(size_t i) const {
  const int bits = 64 - __builtin_clzll(q[i]);
  return size_t((bits + decomp_base_log - 1) / decomp_base_log);
}

size_t BfvParams::digit_count() const {
  size_t total = 0;
  for (size_t i = 0; i < q.size(); ++i) total += digits_per_prime(i);
  return total;
}

uint64_t BfvParams::id() const {
  std::vector<uint8_t> buf;
  buf.push_back(uint8_t(preset));
  put_u64(buf, n);
  put_u64(buf, plain_modulus);
  put_u64(buf, uint64_t(decomp_base_log));
  put_u64(buf, special_prime);
  for (uint64_t v : q) put_u64(buf, v);
  const auto digest = sha256(buf);
  uint64_t out = 0;
  std::memcpy(&out, digest.data(), sizeof(out));
  return out;
}

void BfvParams::validate() const {
  const bool standard_ring = n == 4096 || n == 8192 || n == 16384;
  if (!standard_ring && preset != Preset::kMicro &&
      preset != Preset::kCustom) {
    fail(ErrorCode::kUnsupportedParams, "ring degree must be 4096, 8192 or 16384");
  }
  if (n < 64 || (n & (n - 1)) != 0) {
    fail(ErrorCode::kUnsupportedParams, "ring degree must be a power of two");
  }
  if (plain_modulus != kPlainModulus || (plain_modulus - 1) % (2 * n) != 0) {
    fail(ErrorCode::kUnsupportedParams, "plaintext modulus must be 65537");
  }
  if (q.empty() || q.size() > 16) {
    fail(ErrorCode::kUnsupportedParams, "need 1..16 ciphertext primes");
  }
  if (decomp_base_log < 8 || decomp_base_log > 61) {
    fail(ErrorCode::kUnsupportedParams, "decomposition width out of range");
  }
  std::set<uint64_t> seen;
  auto check_prime = [&](uint64_t v) {
    if (v >= (uint64_t{1} << 61) || v % (2 * n) != 1 || !is_prime(v)) {
      fail(ErrorCode::kUnsupportedParams,
           "modulus " + std::to_string(v) + " is not an NTT prime");
    }
    if (!seen.insert(v).second) {
      fail(ErrorCode::kUnsupportedParams, "duplicate modulus");
    }
  };
  for (uint64_t v : q) check_prime(v);
  check_prime(special_prime);
  if (q_bits() < 40) {
    fail(ErrorCode::kUnsupportedParams, "ciphertext modulus too small");
  }
}

}  // namespace hheml::bfv
