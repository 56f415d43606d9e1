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

#include "hheml/ml.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "hheml/errors.h"

namespace hheml {

FieldVector QuantizedRecord::as_field() const {
  FieldVector v(signal.size());
  for (size_t i = 0; i < signal.size(); ++i) v.set(i, signal[i]);
  return v;
}

int64_t quantize_value(double x) {
  if (!(x >= 0)) x = 0;  // also maps NaN to 0
  if (x > 1) x = 1;
  return int64_t(std::floor(double(kQuantMax) * x + 0.5));
}

QuantizedRecord quantize(const EcgRecord& r) {
  if (r.signal.size() != kEcgLength) {
    fail(ErrorCode::kLengthMismatch, "ECG record must have 128 samples");
  }
  QuantizedRecord q;
  q.label = r.label;
  q.signal.reserve(r.signal.size());
  for (double x : r.signal) q.signal.push_back(quantize_value(x));
  return q;
}

namespace {

void check_shape(const ModelParams& m) {
  if (m.n_out == 0 || m.w.size() != m.n_out * m.dim || m.b.size() != m.n_out) {
    fail(ErrorCode::kLengthMismatch, "model shape does not match its arrays");
  }
}

bool in_param_range(int64_t v) { return v >= kParamMin && v <= kParamMax; }

}  // namespace

int64_t max_logit(const ModelParams& m, size_t row, int64_t input_max) {
  int64_t acc = m.b[row];
  for (size_t i = 0; i < m.dim; ++i) acc += std::max<int64_t>(m.weight(row, i), 0) * input_max;
  return acc;
}

int64_t min_logit(const ModelParams& m, size_t row, int64_t input_max) {
  int64_t acc = m.b[row];
  for (size_t i = 0; i < m.dim; ++i) acc += std::min<int64_t>(m.weight(row, i), 0) * input_max;
  return acc;
}

std::vector<RangeIssue> check_model(const ModelParams& m, const ValidationOptions& opts) {
  check_shape(m);
  std::vector<RangeIssue> issues;
  for (size_t r = 0; r < m.n_out; ++r) {
    for (size_t c = 0; c < m.dim; ++c) {
      if (!in_param_range(m.weight(r, c))) {
        issues.push_back({RangeIssue::Kind::kWeight, r, c, m.weight(r, c)});
      }
    }
  }
  for (size_t r = 0; r < m.n_out; ++r) {
    if (!in_param_range(m.b[r])) issues.push_back({RangeIssue::Kind::kBias, r, 0, m.b[r]});
  }
  if (opts.check_accumulator) {
    for (size_t r = 0; r < m.n_out; ++r) {
      const int64_t hi = max_logit(m, r, opts.input_max);
      const int64_t lo = min_logit(m, r, opts.input_max);
      if (hi > kSafeResultMax) issues.push_back({RangeIssue::Kind::kAccumulator, r, 0, hi});
      if (lo < kSafeResultMin) issues.push_back({RangeIssue::Kind::kAccumulator, r, 0, lo});
    }
  }
  return issues;
}

void validate_model(const ModelParams& m, const ValidationOptions& opts) {
  const auto issues = check_model(m, opts);
  if (issues.empty()) return;
  std::ostringstream os;
  os << issues.size() << " range violation(s):";
  for (size_t i = 0; i < issues.size() && i < 16; ++i) {
    const RangeIssue& v = issues[i];
    switch (v.kind) {
      case RangeIssue::Kind::kWeight:
        os << " w[" << v.row << "][" << v.col << "]=" << v.value;
        break;
      case RangeIssue::Kind::kBias:
        os << " b[" << v.row << "]=" << v.value;
        break;
      case RangeIssue::Kind::kAccumulator:
        os << " logit[" << v.row << "] reaches " << v.value;
        break;
    }
  }
  if (issues.size() > 16) os << " ...";
  fail(ErrorCode::kRangeViolation, os.str());
}

std::vector<int64_t> forward_int(const ModelParams& m, std::span<const int64_t> q) {
  check_shape(m);
  if (q.size() != m.dim) fail(ErrorCode::kLengthMismatch, "input length != model dim");
  // Parameters are bounded by 2^11 and inputs by 2^4, so int64 cannot wrap
  // for any realistic dimension.
  std::vector<int64_t> out(m.n_out);
  for (size_t r = 0; r < m.n_out; ++r) {
    int64_t acc = m.b[r];
    for (size_t i = 0; i < m.dim; ++i) acc += m.weight(r, i) * q[i];
    out[r] = acc;
  }
  return out;
}

std::vector<int64_t> forward_int(const ModelParams& m, const QuantizedRecord& q) {
  return forward_int(m, std::span<const int64_t>(q.signal));
}

std::vector<int64_t> forward_field(const ModelParams& m, std::span<const int64_t> q) {
  check_shape(m);
  if (q.size() != m.dim) fail(ErrorCode::kLengthMismatch, "input length != model dim");
  FieldVector x(m.dim);
  for (size_t i = 0; i < m.dim; ++i) x.set(i, q[i]);
  std::vector<int64_t> out(m.n_out);
  for (size_t r = 0; r < m.n_out; ++r) {
    FieldVector w(m.dim);
    for (size_t i = 0; i < m.dim; ++i) w.set(i, m.weight(r, i));
    out[r] = centered_lift(field_add(dot(w, x), reduce(m.b[r])));
  }
  return out;
}

Label classify(int64_t logit) { return logit >= 0 ? Label::kDiseased : Label::kNormal; }

Label classify_float(const FloatModel& m, std::span<const double> x) {
  if (x.size() != m.dim) fail(ErrorCode::kLengthMismatch, "input length != model dim");
  double z = m.b[0];
  for (size_t i = 0; i < m.dim; ++i) z += m.w[i] * x[i];
  const double p = 1.0 / (1.0 + std::exp(-z));
  return p >= 0.5 ? Label::kDiseased : Label::kNormal;
}

ModelParams quantize_model(const FloatModel& fm, double scale) {
  ModelParams m;
  m.n_out = fm.n_out;
  m.dim = fm.dim;
  auto q = [](double v) {
    return std::clamp<int64_t>(int64_t(std::llround(v)), kParamMin, kParamMax);
  };
  for (double w : fm.w) m.w.push_back(q(w * scale));
  for (double b : fm.b) m.b.push_back(q(b * scale * double(kQuantMax)));
  return m;
}

double max_scale(const FloatModel& fm, bool bound_accumulator) {
  double scale = 1e12;
  auto limit = [&scale](double v, double mult, double hi = double(kParamMax),
                        double lo = double(kParamMin)) {
    if (v > 0) scale = std::min(scale, hi / (v * mult));
    if (v < 0) scale = std::min(scale, lo / (v * mult));
  };
  for (double w : fm.w) limit(w, 1);
  for (double b : fm.b) limit(b, double(kQuantMax));
  if (bound_accumulator) {
    for (size_t r = 0; r < fm.n_out; ++r) {
      double hi = fm.b[r], lo = fm.b[r];
      for (size_t i = 0; i < fm.dim; ++i) {
        const double w = fm.w[r * fm.dim + i];
        (w > 0 ? hi : lo) += w;
      }
      limit(hi, double(kQuantMax), double(kSafeResultMax), double(kSafeResultMin));
      limit(lo, double(kQuantMax), double(kSafeResultMax), double(kSafeResultMin));
    }
  }
  // Back off until rounding cannot push anything over.
  for (;;) {
    const ModelParams m = quantize_model(fm, scale);
    if (check_model(m, {bound_accumulator, kQuantMax}).empty()) return scale;
    scale *= 0.995;
  }
}

AccuracyReport accuracy_plain(const ModelParams& m,
                              const std::vector<QuantizedRecord>& records) {
  if (records.empty()) fail(ErrorCode::kUsage, "no records");
  AccuracyReport rep;
  for (const auto& r : records) {
    const int64_t logit = forward_int(m, r)[0];
    rep.logits.push_back(logit);
    rep.correct += classify(logit) == r.label;
    ++rep.total;
  }
  return rep;
}

AccuracyReport accuracy_float(const FloatModel& m, const std::vector<EcgRecord>& records) {
  if (records.empty()) fail(ErrorCode::kUsage, "no records");
  AccuracyReport rep;
  for (const auto& r : records) {
    rep.correct += classify_float(m, r.signal) == r.label;
    ++rep.total;
  }
  return rep;
}

AccuracyReport accuracy_encrypted(const HheContext& hc, const HheKeyBundle& keys,
                                  const ModelParams& m,
                                  const std::vector<QuantizedRecord>& records, Prng& rng,
                                  size_t threads) {
  if (records.empty()) fail(ErrorCode::kUsage, "no records");
  HheUserSession session(hc, keys.pk, rng.derive("accuracy"));
  AccuracyReport rep;
  constexpr size_t kChunk = 16;
  for (size_t start = 0; start < records.size(); start += kChunk) {
    const size_t end = std::min(records.size(), start + kChunk);
    std::vector<SymCiphertext> cts;
    for (size_t i = start; i < end; ++i) cts.push_back(session.encrypt(records[i].as_field()));
    const auto cx = hhe_decomp_batch(hc, keys.evk, cts, session.encrypted_key(), threads);
    for (size_t i = start; i < end; ++i) {
      const auto res = hhe_eval_linear(hc, keys.evk, m, cx[i - start]);
      const int64_t logit = hhe_dec(hc, keys.sk, res, 1)[0];
      rep.logits.push_back(logit);
      rep.correct += classify(logit) == records[i].label;
      ++rep.total;
    }
  }
  return rep;
}

double accuracy(const ModelParams& m, const std::vector<QuantizedRecord>& records,
                AccuracyMode mode, bfv::Preset preset, const Seed& seed) {
  if (mode == AccuracyMode::kPlainInt) return accuracy_plain(m, records).percent();
  HheParams hp;
  hp.preset = preset;
  hp.max_inputs = m.dim;
  hp.max_outputs = m.n_out;
  const HheContext hc(hp);
  Prng rng(seed);
  const HheKeyBundle keys = hhe_keygen(hc, rng);
  return accuracy_encrypted(hc, keys, m, records, rng).percent();
}

// ---- synthetic data --------------------------------------------------------

namespace {

constexpr double kBaseline = 0.15;

double bump(double t, double mu, double sigma) {
  const double z = (t - mu) / sigma;
  return std::exp(-0.5 * z * z);
}

// One beat sampled on [0, 1): P wave, QRS complex, T wave.
double normal_beat(double t) {
  return kBaseline + 0.10 * bump(t, 0.18, 0.025) + 0.70 * bump(t, 0.40, 0.012) -
         0.08 * bump(t, 0.43, 0.010) + 0.20 * bump(t, 0.68, 0.045);
}

// Flattened P, widened QRS, elevated ST segment and an inverted T wave.
double diseased_beat(double t) {
  return kBaseline + 0.04 * bump(t, 0.18, 0.025) + 0.55 * bump(t, 0.40, 0.030) +
         0.10 * bump(t, 0.53, 0.050) - 0.07 * bump(t, 0.70, 0.045);
}

double sample_time(size_t i, int shift) {
  return (double(i) - double(shift)) / double(kEcgLength);
}

double unit(Prng& rng) { return double(rng.next_u64() >> 11) * 0x1.0p-53; }

double gaussian(Prng& rng) {
  // Box-Muller; 1 - unit() avoids log(0).
  const double u1 = 1.0 - unit(rng);
  const double u2 = unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2 * std::numbers::pi * u2);
}

}  // namespace

std::vector<EcgRecord> synthetic_ecg(size_t n, const Seed& seed,
                                     const SyntheticEcgOptions& opts) {
  Prng rng = Prng(seed).derive("synthetic-ecg");
  std::vector<EcgRecord> out;
  out.reserve(n);
  for (size_t k = 0; k < n; ++k) {
    EcgRecord r;
    r.label = unit(rng) < opts.diseased_fraction ? Label::kDiseased : Label::kNormal;
    const double amp = 0.85 + 0.30 * unit(rng);
    const int shift =
        int(rng.uniform(uint64_t(2 * opts.max_shift + 1))) - opts.max_shift;
    const double wander = 0.04 * unit(rng);
    const double freq = 0.5 + unit(rng);
    const double phase = 2 * std::numbers::pi * unit(rng);
    r.signal.resize(kEcgLength);
    for (size_t i = 0; i < kEcgLength; ++i) {
      const double t = sample_time(i, shift);
      const double beat = r.label == Label::kDiseased ? diseased_beat(t) : normal_beat(t);
      double v = kBaseline + amp * (beat - kBaseline) +
                 wander * std::sin(2 * std::numbers::pi * freq * t + phase) +
                 opts.noise * gaussian(rng);
      r.signal[i] = std::clamp(v, 0.0, 1.0);
    }
    out.push_back(std::move(r));
  }
  return out;
}

FloatModel reference_float_model() {
  // Class means averaged over the generator's shift range, then the
  // matched filter between them with the decision threshold at the midpoint.
  const SyntheticEcgOptions opts;
  std::vector<double> mn(kEcgLength, 0), md(kEcgLength, 0);
  for (int s = -opts.max_shift; s <= opts.max_shift; ++s) {
    for (size_t i = 0; i < kEcgLength; ++i) {
      mn[i] += normal_beat(sample_time(i, s));
      md[i] += diseased_beat(sample_time(i, s));
    }
  }
  FloatModel fm;
  fm.dim = kEcgLength;
  double b = 0;
  for (size_t i = 0; i < kEcgLength; ++i) {
    const double count = 2.0 * opts.max_shift + 1;
    const double w = (md[i] - mn[i]) / count;
    fm.w.push_back(w);
    b -= w * (md[i] + mn[i]) / (2 * count);
  }
  fm.b.push_back(b);
  return fm;
}

ModelParams reference_model() {
  const FloatModel fm = reference_float_model();
  return quantize_model(fm, max_scale(fm, true));
}

// ---- file formats ----------------------------------------------------------

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  for (;;) {
    const size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? line.npos
                                                                      : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) {
      f.remove_suffix(1);
    }
  }
  return out;
}

template <class T>
T parse_number(std::string_view s, const std::string& where) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorCode::kParseError, where + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

Label parse_label(std::string_view s, const std::string& where) {
  const int v = parse_number<int>(s, where);
  if (v != 0 && v != 1) fail(ErrorCode::kParseError, where + ": label must be 0 or 1");
  return Label(v);
}

// Calls fn(fields, where) for each non-empty line.
template <class Fn>
void for_each_row(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_commas(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (fields.size() != kEcgLength + 1) {
      fail(ErrorCode::kParseError, where + ": expected 129 fields, got " +
                                       std::to_string(fields.size()));
    }
    fn(fields, where);
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path);
  return out;
}

}  // namespace

std::vector<EcgRecord> read_ecg_csv(const std::string& path) {
  std::vector<EcgRecord> out;
  for_each_row(path, [&](const auto& f, const std::string& where) {
    EcgRecord r;
    for (size_t i = 0; i < kEcgLength; ++i) {
      r.signal.push_back(std::clamp(parse_number<double>(f[i], where), 0.0, 1.0));
    }
    r.label = parse_label(f[kEcgLength], where);
    out.push_back(std::move(r));
  });
  return out;
}

void write_ecg_csv(const std::string& path, const std::vector<EcgRecord>& records) {
  std::ofstream out = open_out(path);
  char buf[32];
  for (const auto& r : records) {
    for (double v : r.signal) {
      // Shortest round-trip representation keeps files byte-stable.
      const auto res = std::to_chars(buf, buf + sizeof(buf), v);
      out.write(buf, res.ptr - buf);
      out.put(',');
    }
    out << int(r.label) << '\n';
  }
  if (!out) fail(ErrorCode::kIoError, "write failed: " + path);
}

std::vector<QuantizedRecord> read_quantized_csv(const std::string& path) {
  std::vector<QuantizedRecord> out;
  for_each_row(path, [&](const auto& f, const std::string& where) {
    QuantizedRecord r;
    for (size_t i = 0; i < kEcgLength; ++i) {
      const int64_t v = parse_number<int64_t>(f[i], where);
      if (v < 0 || v > kQuantMax) fail(ErrorCode::kParseError, where + ": value out of [0, 15]");
      r.signal.push_back(v);
    }
    r.label = parse_label(f[kEcgLength], where);
    out.push_back(std::move(r));
  });
  return out;
}

void write_quantized_csv(const std::string& path,
                         const std::vector<QuantizedRecord>& records) {
  std::ofstream out = open_out(path);
  for (const auto& r : records) {
    for (int64_t v : r.signal) out << v << ',';
    out << int(r.label) << '\n';
  }
  if (!out) fail(ErrorCode::kIoError, "write failed: " + path);
}

std::vector<QuantizedRecord> read_records_quantized(const std::string& path) {
  // Integer-only files are already quantized; anything else is a float signal.
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path);
  std::string first;
  while (std::getline(in, first) && first.find_first_not_of(" \t\r") == std::string::npos) {
  }
  const bool integer_only = first.find_first_of(".eE") == std::string::npos;
  if (integer_only) {
    bool fits = true;
    for (auto f : split_commas(first)) {
      int64_t v = 0;
      std::from_chars(f.data(), f.data() + f.size(), v);
      if (v > kQuantMax) fits = false;
    }
    if (fits) return read_quantized_csv(path);
  }
  std::vector<QuantizedRecord> out;
  for (const auto& r : read_ecg_csv(path)) out.push_back(quantize(r));
  return out;
}

ModelFile read_model_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParseError, path + ": " + e.what());
  }
  ModelFile f;
  try {
    f.model.dim = j.at("dim").get<size_t>();
    f.model.n_out = j.value("n_out", size_t{1});
    if (!j.contains("float_w") || j.contains("w")) {
      f.model.w = j.at("w").get<std::vector<int64_t>>();
      f.model.b = j.at("b").get<std::vector<int64_t>>();
    }
    if (j.contains("float_w")) {
      FloatModel fm;
      fm.dim = f.model.dim;
      fm.n_out = f.model.n_out;
      fm.w = j.at("float_w").get<std::vector<double>>();
      fm.b = j.at("float_b").get<std::vector<double>>();
      if (fm.w.size() != fm.dim * fm.n_out || fm.b.size() != fm.n_out) {
        fail(ErrorCode::kParseError, path + ": float model shape");
      }
      f.float_model = std::move(fm);
      // Float-only file: quantize at the largest overflow-free scale.
      if (!j.contains("w")) {
        f.model = quantize_model(*f.float_model, max_scale(*f.float_model, true));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParseError, path + ": " + e.what());
  }
  if (f.model.w.size() != f.model.n_out * f.model.dim || f.model.b.size() != f.model.n_out) {
    fail(ErrorCode::kParseError, path + ": model shape does not match its arrays");
  }
  return f;
}

void write_model_json(const std::string& path, const ModelFile& file) {
  nlohmann::ordered_json j;
  j["n_out"] = file.model.n_out;
  j["dim"] = file.model.dim;
  j["w"] = file.model.w;
  j["b"] = file.model.b;
  if (file.float_model) {
    j["float_w"] = file.float_model->w;
    j["float_b"] = file.float_model->b;
  }
  std::ofstream out = open_out(path);
  out << j.dump(1) << '\n';
  if (!out) fail(ErrorCode::kIoError, "write failed: " + path);
}

}  // namespace hheml
