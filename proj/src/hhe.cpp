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

#include "hheml/hhe.h"

#include <algorithm>
#include <atomic>
#include <bit>
#include <exception>
#include <mutex>
#include <set>
#include <string>
#include <thread>

#include "hheml/bfv/encoder.h"
#include "hheml/bfv/encryptor.h"
#include "hheml/bfv/evaluator.h"
#include "hheml/errors.h"

namespace hheml {
namespace {

using bfv::Ciphertext;
using bfv::Evaluator;

constexpr uint8_t kEvalKeysTag = 0x45;
constexpr uint8_t kEncryptedKeyTag = 0x4b;
constexpr uint8_t kEncryptedModelTag = 0x4d;

size_t next_pow2(size_t v) { return std::bit_ceil(std::max<size_t>(v, 1)); }

// Which part of the keystream circuit one affine pass evaluates, per row.
struct RowLayers {
  std::vector<AffineLayer> layers;  // one per block, empty = row unused
  std::vector<uint32_t> out_rows;   // outputs kept per block
};

// Evaluates one affine pass over every block region of both rows with
// baby-step/giant-step diagonals. Diagonal d of the t x t block splits into
// the part that reads forward (j >= i, rotation d) and the part that wraps
// (j < i, rotation d - t). Outputs outside the kept rows are zero.
class AffinePass {
 public:
  AffinePass(const HheContext& hc, const Evaluator& ev,
             const bfv::BatchEncoder& enc)
      : hc_(hc), ev_(ev), enc_(enc) {}

  Ciphertext run(const Ciphertext& in, const RowLayers rows[2],
                 const bfv::GaloisKeys& gk) const {
    const uint32_t t = hc_.cipher().t;
    const uint32_t bs = hc_.baby_steps();
    const uint32_t gs = hc_.giant_steps();
    const size_t n = hc_.bfv()->n();
    const size_t row = hc_.bfv()->row_size();

    // diag[family][g][b]: pre-rotated diagonal slots.
    auto index = [&](int fam, uint32_t g, uint32_t b) {
      return (size_t(fam) * gs + g) * bs + b;
    };
    std::vector<std::vector<uint64_t>> diag(2 * size_t(gs) * bs);
    std::vector<uint64_t> constant(n, 0);
    bool has_constant = false;

    for (int r = 0; r < 2; ++r) {
      const RowLayers& rl = rows[r];
      for (size_t blk = 0; blk < rl.layers.size(); ++blk) {
        const AffineLayer& layer = rl.layers[blk];
        if (layer.t == 0) continue;
        const size_t base = hc_.region_base(blk);
        for (uint32_t i = 0; i < rl.out_rows[blk]; ++i) {
          const size_t slot = base + i;
          for (uint32_t j = 0; j < t; ++j) {
            const FieldElem m = layer.at(i, j);
            if (m == 0) continue;
            const int fam = j >= i ? 0 : 1;
            const uint32_t d = (j + t - i) % t;
            const uint32_t g = d / bs, b = d % bs;
            const int64_t step = fam == 0 ? int64_t(g) * bs
                                          : int64_t(g) * bs - int64_t(t);
            const size_t target =
                size_t((int64_t(slot) + step) % int64_t(row) + int64_t(row)) %
                row;
            auto& v = diag[index(fam, g, b)];
            if (v.empty()) v.assign(n, 0);
            v[r * row + target] = m;
          }
          const FieldElem c = layer.constant[i];
          if (c != 0) {
            constant[r * row + slot] = c;
            has_constant = true;
          }
        }
      }
    }

    std::vector<int64_t> baby_steps;
    for (uint32_t b = 1; b < bs; ++b) baby_steps.push_back(b);
    std::vector<Ciphertext> baby;
    baby.reserve(bs);
    baby.push_back(in);
    for (auto& c : ev_.rotate_many(in, baby_steps, gk)) {
      baby.push_back(std::move(c));
    }
    for (auto& c : baby) ev_.to_ntt(c);

    Ciphertext out;
    bool have_out = false;
    for (int fam = 0; fam < 2; ++fam) {
      for (uint32_t g = 0; g < gs; ++g) {
        Ciphertext acc;
        for (uint32_t b = 0; b < bs; ++b) {
          const auto& v = diag[index(fam, g, b)];
          if (v.empty()) continue;
          ev_.mul_plain_accumulate(acc, baby[b], ev_.prepare(enc_.encode(v)));
        }
        if (acc.size() == 0) continue;
        ev_.from_ntt(acc);
        const int64_t step =
            fam == 0 ? int64_t(g) * bs : int64_t(g) * bs - int64_t(t);
        if (step != 0) acc = ev_.rotate_rows(acc, step, gk);
        if (have_out) {
          ev_.add_inplace(out, acc);
        } else {
          out = std::move(acc);
          have_out = true;
        }
      }
    }
    if (!have_out) {
      // Every kept matrix entry was zero: the linear part vanishes.
      out = ev_.sub(in, in);
    }
    if (has_constant) out = ev_.add_plain(out, enc_.encode(constant));
    return out;
  }

 private:
  const HheContext& hc_;
  const Evaluator& ev_;
  const bfv::BatchEncoder& enc_;
};

void check_params(const HheContext& hc, const Ciphertext& c,
                  const char* what) {
  if (c.params_id() != hc.bfv()->params_id()) {
    fail(ErrorCode::kParamMismatch,
         std::string(what) + " was made under another parameter set");
  }
}

void check_evk(const HheContext& hc, const EvalKeys& evk) {
  if (evk.rk.empty()) fail(ErrorCode::kMissingEvalKey, "no relinearization key");
  if (evk.rk.params_id != hc.bfv()->params_id()) {
    fail(ErrorCode::kParamMismatch, "evaluation keys use another parameter set");
  }
}

}  // namespace

HheContext::HheContext(const HheParams& params) : params_(params) {
  bfv_ = bfv::BfvContext::create(bfv::BfvParams::from_preset(params.preset));
  init();
}

HheContext::HheContext(const HheParams& params,
                       const bfv::BfvParams& bfv_params)
    : params_(params) {
  bfv_ = bfv::BfvContext::create(bfv_params);
  init();
}

void HheContext::init() {
  params_.cipher.validate();
  const size_t t = params_.cipher.t;
  const size_t row = bfv_->row_size();
  if (params_.max_inputs == 0 || params_.max_outputs == 0) {
    fail(ErrorCode::kUnsupportedParams, "empty layout");
  }
  regions_ = row > t + 1 ? (row - 1) / (t + 1) : 0;
  const size_t blocks = (params_.max_inputs + t - 1) / t;
  if (blocks > regions_) {
    fail(ErrorCode::kUnsupportedParams,
         std::to_string(params_.max_inputs) + " inputs need " +
             std::to_string(blocks) + " block regions, ring row holds " +
             std::to_string(regions_));
  }
  stride_ = next_pow2(1 + blocks * (t + 1));
  if (next_pow2(params_.max_outputs) * stride_ > row) {
    fail(ErrorCode::kUnsupportedParams,
         std::to_string(params_.max_outputs) + " outputs of stride " +
             std::to_string(stride_) + " exceed a ring row");
  }
  baby_ = 1;
  while (size_t(baby_) * baby_ < t) baby_ *= 2;
  giant_ = uint32_t((t + baby_ - 1) / baby_);
}

size_t HheContext::data_slot(size_t i) const {
  const size_t t = params_.cipher.t;
  return region_base(i / t) + i % t;
}

std::vector<int64_t> HheContext::required_steps() const {
  const int64_t t = params_.cipher.t;
  const int64_t row = int64_t(bfv_->row_size());
  std::set<int64_t> steps;
  auto add = [&](int64_t s) {
    s = ((s % row) + row) % row;
    if (s != 0) steps.insert(s > row / 2 ? s - row : s);
  };
  for (uint32_t b = 1; b < baby_; ++b) add(b);
  for (uint32_t g = 0; g < giant_; ++g) {
    add(int64_t(g) * baby_);
    add(int64_t(g) * baby_ - t);
  }
  add(-1);
  for (size_t s = 1; s < stride_; s *= 2) add(int64_t(s));
  for (size_t k = 1; k < next_pow2(params_.max_outputs); k *= 2) {
    add(-int64_t(k * stride_));
  }
  return {steps.begin(), steps.end()};
}

Bytes EvalKeys::serialize() const {
  ByteWriter w;
  w.u8(kEvalKeysTag);
  w.blob(rk.serialize());
  w.blob(gk.serialize());
  return w.take();
}

EvalKeys EvalKeys::deserialize(const bfv::BfvContext& ctx,
                               std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.u8() != kEvalKeysTag) fail(ErrorCode::kParseError, "not evaluation keys");
  EvalKeys evk;
  evk.rk = bfv::RelinKey::deserialize(ctx, r.blob());
  evk.gk = bfv::GaloisKeys::deserialize(ctx, r.blob());
  r.expect_end();
  return evk;
}

HheKeyBundle hhe_keygen(const HheContext& hc, Prng& rng) {
  bfv::KeySet keys = bfv::he_keygen(hc.bfv(), rng, hc.required_steps());
  return HheKeyBundle{std::move(keys.pk), std::move(keys.sk),
                      EvalKeys{std::move(keys.rk), std::move(keys.gk)}};
}

Bytes EncryptedKey::serialize() const {
  ByteWriter w;
  w.u8(kEncryptedKeyTag);
  w.u32(uint32_t(cts.size()));
  for (const auto& c : cts) w.blob(c.serialize());
  return w.take();
}

EncryptedKey EncryptedKey::deserialize(const bfv::BfvContext& ctx,
                                       std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.u8() != kEncryptedKeyTag) fail(ErrorCode::kParseError, "not an encrypted key");
  const uint32_t count = r.u32();
  if (count == 0 || count > 16) fail(ErrorCode::kParseError, "bad ciphertext count");
  EncryptedKey ek;
  for (uint32_t i = 0; i < count; ++i) {
    ek.cts.push_back(Ciphertext::deserialize(ctx, r.blob()));
  }
  r.expect_end();
  return ek;
}

EncryptedKey encrypt_symmetric_key(const HheContext& hc,
                                   const bfv::PublicKey& pk,
                                   const SymmetricKey& key, Prng& rng) {
  const uint32_t t = hc.cipher().t;
  if (key.k.size() != 2 * size_t(t)) {
    fail(ErrorCode::kConfigMismatch, "key length does not match 2t");
  }
  const size_t row = hc.bfv()->row_size();
  std::vector<uint64_t> slots(hc.bfv()->slot_count(), 0);
  for (size_t r = 0; r < hc.region_capacity(); ++r) {
    const size_t base = hc.region_base(r);
    for (uint32_t j = 0; j < t; ++j) {
      slots[base + j] = key.k[j];
      slots[row + base + j] = key.k[t + j];
    }
  }
  bfv::BatchEncoder enc(hc.bfv());
  bfv::Encryptor encryptor(hc.bfv(), pk);
  EncryptedKey ek;
  ek.cts.push_back(encryptor.encrypt(enc.encode(slots), rng));
  return ek;
}

namespace {

Prng split(Prng& rng) {
  Seed s;
  rng.fill(s);
  return Prng(s);
}

void check_fits(const HheContext& hc, size_t len) {
  if (len > hc.params().max_inputs) {
    fail(ErrorCode::kLayoutMismatch,
         std::to_string(len) + " elements exceed the layout width " +
             std::to_string(hc.params().max_inputs));
  }
}

}  // namespace

HheUserSession::HheUserSession(const HheContext& hc, const bfv::PublicKey& pk,
                               Prng rng)
    : hc_(&hc),
      rng_(std::move(rng)),
      ske_(hc.cipher(), ske_gen(hc.cipher(), rng_), split(rng_)) {
  encrypted_key_ = encrypt_symmetric_key(hc, pk, ske_.key(), rng_);
}

SymCiphertext HheUserSession::encrypt(const FieldVector& x) {
  check_fits(*hc_, x.size());
  return ske_.encrypt(x);
}

HheCiphertexts hhe_enc(const HheContext& hc, const bfv::PublicKey& pk,
                       const FieldVector& x, Prng& rng) {
  HheUserSession session(hc, pk, split(rng));
  SymCiphertext sym = session.encrypt(x);
  return HheCiphertexts{std::move(sym), session.encrypted_key()};
}

bfv::Ciphertext hhe_decomp(const HheContext& hc, const EvalKeys& evk,
                           const SymCiphertext& c, const EncryptedKey& ck) {
  const CipherConfig& cfg = hc.cipher();
  const uint32_t t = cfg.t;
  if (ck.cts.size() != 1) {
    fail(ErrorCode::kLayoutMismatch, "encrypted key has an unexpected shape");
  }
  check_params(hc, ck.cts[0], "encrypted key");
  check_evk(hc, evk);
  if (c.body.empty()) fail(ErrorCode::kLayoutMismatch, "empty ciphertext");
  check_fits(hc, c.body.size());

  const auto& ctx = hc.bfv();
  Evaluator ev(ctx);
  bfv::BatchEncoder enc(ctx);
  AffinePass pass(hc, ev, enc);
  const size_t nb = c.block_count(cfg);

  auto round_layers = [&](uint32_t round, bool right, bool final_layer) {
    RowLayers rl;
    rl.layers.resize(nb);
    rl.out_rows.assign(nb, t);
    for (size_t blk = 0; blk < nb; ++blk) {
      rl.layers[blk] =
          affine_layer(cfg, c.nonce, c.start_counter + blk, round,
                       right ? Branch::kRight : Branch::kLeft);
    }
    if (final_layer) {
      // Keystream only where data sits so every other slot stays zero.
      const size_t tail = c.body.size() - (nb - 1) * t;
      rl.out_rows[nb - 1] = uint32_t(tail);
    }
    return rl;
  };

  Ciphertext state = ck.cts[0];
  for (uint32_t j = 0; j < cfg.rounds; ++j) {
    const RowLayers rows[2] = {round_layers(j, false, false),
                               round_layers(j, true, false)};
    state = pass.run(state, rows, evk.gk);
    // (2L + R, L + 2R): row 0 holds L and row 1 holds R.
    state = ev.add(ev.mul_scalar(state, 2), ev.swap_rows(state, evk.gk));
    if (j + 1 < cfg.rounds) {
      // Element i picks up the square of element i - 1; the gap slot in
      // front of each region feeds zero into element 0.
      const Ciphertext shifted = ev.rotate_rows(state, -1, evk.gk);
      ev.add_inplace(state, ev.square_relin(shifted, evk.rk));
    } else {
      state = ev.mul_relin(ev.square_relin(state, evk.rk), state, evk.rk);
    }
  }
  const RowLayers last[2] = {round_layers(cfg.rounds, false, true), RowLayers{}};
  const Ciphertext keystream = pass.run(state, last, evk.gk);

  std::vector<uint64_t> body(ctx->slot_count(), 0);
  for (size_t i = 0; i < c.body.size(); ++i) body[hc.data_slot(i)] = c.body[i];
  return ev.add_plain(ev.negate(keystream), enc.encode(body));
}

std::vector<bfv::Ciphertext> hhe_decomp_batch(
    const HheContext& hc, const EvalKeys& evk,
    const std::vector<SymCiphertext>& cs, const EncryptedKey& ck,
    size_t threads) {
  std::vector<Ciphertext> out(cs.size());
  if (threads <= 1 || cs.size() <= 1) {
    for (size_t i = 0; i < cs.size(); ++i) out[i] = hhe_decomp(hc, evk, cs[i], ck);
    return out;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= cs.size()) return;
      try {
        out[i] = hhe_decomp(hc, evk, cs[i], ck);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        next = cs.size();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (size_t w = 0; w < std::min(threads, cs.size()); ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
  return out;
}

Bytes EncryptedModel::serialize() const {
  ByteWriter w;
  w.u8(kEncryptedModelTag);
  w.u32(uint32_t(n_out));
  w.u32(uint32_t(dim));
  w.blob(c_w.serialize());
  w.blob(c_b.serialize());
  return w.take();
}

EncryptedModel EncryptedModel::deserialize(const bfv::BfvContext& ctx,
                                           std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.u8() != kEncryptedModelTag) fail(ErrorCode::kParseError, "not an encrypted model");
  EncryptedModel m;
  m.n_out = r.u32();
  m.dim = r.u32();
  m.c_w = Ciphertext::deserialize(ctx, r.blob());
  m.c_b = Ciphertext::deserialize(ctx, r.blob());
  r.expect_end();
  return m;
}

namespace {

void check_model_shape(const HheContext& hc, size_t n_out, size_t dim) {
  if (n_out == 0 || dim == 0) fail(ErrorCode::kLayoutMismatch, "empty model");
  if (n_out > hc.params().max_outputs) {
    fail(ErrorCode::kLayoutMismatch,
         std::to_string(n_out) + " outputs exceed the layout limit " +
             std::to_string(hc.params().max_outputs));
  }
  check_fits(hc, dim);
}

// Weight slots: row k of w at output_slot(k) + data_slot(i).
std::vector<uint64_t> weight_slots(const HheContext& hc, const ModelParams& m) {
  std::vector<uint64_t> slots(hc.bfv()->slot_count(), 0);
  for (size_t k = 0; k < m.n_out; ++k) {
    for (size_t i = 0; i < m.dim; ++i) {
      slots[hc.output_slot(k) + hc.data_slot(i)] = reduce(m.weight(k, i));
    }
  }
  return slots;
}

std::vector<uint64_t> bias_slots(const HheContext& hc, const ModelParams& m) {
  std::vector<uint64_t> slots(hc.bfv()->slot_count(), 0);
  for (size_t k = 0; k < m.n_out; ++k) slots[hc.output_slot(k)] = reduce(m.b[k]);
  return slots;
}

void check_model_params(const ModelParams& m) {
  if (m.w.size() != m.n_out * m.dim || m.b.size() != m.n_out) {
    fail(ErrorCode::kLengthMismatch, "model shape does not match its arrays");
  }
}

// Copies the data region into each output region: region k = rot(x, -k D).
Ciphertext replicate(const HheContext& hc, const Evaluator& ev,
                     const EvalKeys& evk, Ciphertext x, size_t n_out) {
  for (size_t k = 1; k < next_pow2(n_out); k *= 2) {
    ev.add_inplace(x, ev.rotate_rows(x, -int64_t(k * hc.output_stride()), evk.gk));
  }
  return x;
}

// Sums each output region into its first slot and clears the rest.
Ciphertext fold(const HheContext& hc, const Evaluator& ev,
                const bfv::BatchEncoder& enc, const EvalKeys& evk,
                Ciphertext prod, size_t n_out) {
  for (size_t s = hc.output_stride() / 2; s >= 1; s /= 2) {
    ev.add_inplace(prod, ev.rotate_rows(prod, int64_t(s), evk.gk));
  }
  std::vector<uint64_t> mask(hc.bfv()->slot_count(), 0);
  for (size_t k = 0; k < n_out; ++k) mask[hc.output_slot(k)] = 1;
  return ev.mul_plain(prod, enc.encode(mask));
}

}  // namespace

EncryptedModel encrypt_model(const HheContext& hc, const bfv::PublicKey& pk,
                             const ModelParams& model, Prng& rng) {
  check_model_params(model);
  check_model_shape(hc, model.n_out, model.dim);
  bfv::BatchEncoder enc(hc.bfv());
  bfv::Encryptor encryptor(hc.bfv(), pk);
  EncryptedModel em;
  em.n_out = model.n_out;
  em.dim = model.dim;
  em.c_w = encryptor.encrypt(enc.encode(weight_slots(hc, model)), rng);
  em.c_b = encryptor.encrypt(enc.encode(bias_slots(hc, model)), rng);
  return em;
}

bfv::Ciphertext hhe_eval_linear(const HheContext& hc, const EvalKeys& evk,
                                const ModelParams& model,
                                const bfv::Ciphertext& cx) {
  check_model_params(model);
  check_model_shape(hc, model.n_out, model.dim);
  check_params(hc, cx, "input ciphertext");
  Evaluator ev(hc.bfv());
  bfv::BatchEncoder enc(hc.bfv());
  Ciphertext x = replicate(hc, ev, evk, cx, model.n_out);
  Ciphertext prod = ev.mul_plain(x, enc.encode(weight_slots(hc, model)));
  Ciphertext out = fold(hc, ev, enc, evk, std::move(prod), model.n_out);
  return ev.add_plain(out, enc.encode(bias_slots(hc, model)));
}

bfv::Ciphertext hhe_eval_linear(const HheContext& hc, const EvalKeys& evk,
                                const EncryptedModel& model,
                                const bfv::Ciphertext& cx) {
  check_model_shape(hc, model.n_out, model.dim);
  check_params(hc, cx, "input ciphertext");
  check_params(hc, model.c_w, "encrypted weights");
  check_params(hc, model.c_b, "encrypted bias");
  check_evk(hc, evk);
  Evaluator ev(hc.bfv());
  bfv::BatchEncoder enc(hc.bfv());
  Ciphertext x = replicate(hc, ev, evk, cx, model.n_out);
  Ciphertext prod = ev.mul_relin(x, model.c_w, evk.rk);
  Ciphertext out = fold(hc, ev, enc, evk, std::move(prod), model.n_out);
  return ev.add(out, model.c_b);
}

std::vector<int64_t> hhe_dec(const HheContext& hc, const bfv::SecretKey& sk,
                             const bfv::Ciphertext& c_res, size_t n_outputs) {
  if (n_outputs > hc.params().max_outputs) {
    fail(ErrorCode::kLayoutMismatch, "more outputs requested than the layout holds");
  }
  check_params(hc, c_res, "result ciphertext");
  bfv::Decryptor dec(hc.bfv(), sk);
  bfv::BatchEncoder enc(hc.bfv());
  const FieldVector slots = enc.decode(dec.decrypt(c_res));
  std::vector<int64_t> out(n_outputs);
  for (size_t k = 0; k < n_outputs; ++k) {
    out[k] = centered_lift(slots[hc.output_slot(k)]);
  }
  return out;
}

FieldVector hhe_dec_data(const HheContext& hc, const bfv::SecretKey& sk,
                         const bfv::Ciphertext& c, size_t len) {
  check_fits(hc, len);
  check_params(hc, c, "ciphertext");
  bfv::Decryptor dec(hc.bfv(), sk);
  bfv::BatchEncoder enc(hc.bfv());
  const FieldVector slots = enc.decode(dec.decrypt(c));
  FieldVector out(len);
  for (size_t i = 0; i < len; ++i) out.set(i, slots[hc.data_slot(i)]);
  return out;
}

}  // namespace hheml
