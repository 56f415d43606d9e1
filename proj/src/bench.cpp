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

#include "hheml/bench.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "hheml/bfv/encoder.h"
#include "hheml/bfv/encryptor.h"
#include "hheml/bfv/keygen.h"
#include "hheml/errors.h"

namespace hheml {

std::string BenchReport::meta(const std::string& key) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return v;
  }
  return {};
}

const BenchRow* BenchReport::find(const std::string& op, size_t input_count) const {
  for (const auto& r : rows) {
    if (r.op == op && r.input_count == input_count) return &r;
  }
  return nullptr;
}

namespace {

constexpr const char* kCsvHeader = "op,party,input_count,wall_time_ms,bytes_sent";

// Shortest form that parses back to the same double.
std::string format_ms(double ms) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), ms);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string BenchReport::to_csv() const {
  std::ostringstream os;
  for (const auto& [k, v] : metadata) os << "# " << k << "=" << v << "\n";
  os << kCsvHeader << "\n";
  for (const auto& r : rows) {
    os << r.op << "," << r.party << "," << r.input_count << "," << format_ms(r.wall_time_ms)
       << "," << r.bytes_sent << "\n";
  }
  return os.str();
}

BenchReport BenchReport::parse_csv(const std::string& text) {
  BenchReport rep;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const size_t eq = line.find('=');
      if (eq == std::string::npos) fail(ErrorCode::kParseError, "metadata line: " + line);
      rep.metadata.emplace_back(line.substr(2, eq - 2), line.substr(eq + 1));
      continue;
    }
    if (!header) {
      if (line != kCsvHeader) fail(ErrorCode::kParseError, "unexpected report header");
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 5) fail(ErrorCode::kParseError, "report row: " + line);
    try {
      rep.rows.push_back({f[0], f[1], std::stoull(f[2]), std::stod(f[3]), std::stoull(f[4])});
    } catch (const std::exception&) {
      fail(ErrorCode::kParseError, "report row: " + line);
    }
  }
  if (!header) fail(ErrorCode::kParseError, "report has no header");
  return rep;
}

std::string BenchReport::to_json() const {
  nlohmann::ordered_json j;
  j["metadata"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : metadata) j["metadata"][k] = v;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    j["rows"].push_back({{"op", r.op},
                         {"party", r.party},
                         {"input_count", r.input_count},
                         {"wall_time_ms", r.wall_time_ms},
                         {"bytes_sent", r.bytes_sent}});
  }
  return j.dump(2) + "\n";
}

BenchReport BenchReport::parse_json(const std::string& text) {
  BenchReport rep;
  try {
    const auto j = nlohmann::ordered_json::parse(text);
    for (const auto& [k, v] : j.at("metadata").items()) {
      rep.metadata.emplace_back(k, v.get<std::string>());
    }
    for (const auto& r : j.at("rows")) {
      rep.rows.push_back({r.at("op").get<std::string>(), r.at("party").get<std::string>(),
                          r.at("input_count").get<size_t>(),
                          r.at("wall_time_ms").get<double>(),
                          r.at("bytes_sent").get<size_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParseError, e.what());
  }
  return rep;
}

namespace {

bool is_json_path(const std::string& path) {
  return path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
}

}  // namespace

void BenchReport::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path);
  out << (is_json_path(path) ? to_json() : to_csv());
  if (!out) fail(ErrorCode::kIoError, "write failed: " + path);
}

BenchReport BenchReport::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return is_json_path(path) ? parse_json(ss.str()) : parse_csv(ss.str());
}

std::string hardware_note() {
  std::string model = "unknown cpu";
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("model name", 0) == 0) {
      const size_t colon = line.find(':');
      if (colon != std::string::npos) model = line.substr(colon + 2);
      break;
    }
  }
  return model + "; " + std::to_string(std::thread::hardware_concurrency()) + " threads";
}

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

Seed seed_from_u64(uint64_t seed) {
  Seed s{};
  for (int i = 0; i < 8; ++i) s[i] = uint8_t(seed >> (8 * i));
  return s;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) fail(ErrorCode::kUsage, "fit needs two points");
  const double n = double(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit f;
  f.slope = sxx > 0 ? sxy / sxx : 0;
  f.intercept = my - f.slope * mx;
  double ss_res = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += e * e;
  }
  f.r2 = syy > 0 ? 1 - ss_res / syy : 1;
  return f;
}

namespace {

using SteadyClock = std::chrono::steady_clock;

double ms_since(SteadyClock::time_point t0) {
  return std::chrono::duration<double, std::milli>(SteadyClock::now() - t0).count();
}

ModelParams random_model(Prng& rng, size_t dim) {
  ModelParams m;
  m.dim = dim;
  const uint64_t span = uint64_t(kParamMax - kParamMin + 1);
  for (size_t i = 0; i < dim; ++i) m.w.push_back(kParamMin + int64_t(rng.uniform(span)));
  m.b.push_back(kParamMin + int64_t(rng.uniform(span)));
  return m;
}

int64_t logit(const ModelParams& m, const FieldVector& x) {
  int64_t acc = m.b[0];
  for (size_t i = 0; i < m.dim; ++i) acc += m.w[i] * int64_t(x[i]);
  return acc;
}

FieldVector random_input(Prng& rng, const ModelParams& m) {
  for (;;) {
    FieldVector x(m.dim);
    for (size_t i = 0; i < m.dim; ++i) x.set(i, int64_t(rng.uniform(16)));
    const int64_t z = logit(m, x);
    if (z >= kSafeResultMin && z <= kSafeResultMax) return x;
  }
}

std::string phase_parties(const Transcript& t, Phase p) {
  std::string out;
  for (const auto& timing : t.timings) {
    if (timing.phase != p) continue;
    const std::string name = timing.party.role == Role::kUser
                                 ? std::string("user")
                                 : party_name(timing.party);
    if (out.find(name) != std::string::npos) continue;
    if (!out.empty()) out += "+";
    out += name;
  }
  return out.empty() ? "-" : out;
}

size_t phase_bytes(const Transcript& t, Phase p) {
  switch (p) {
    case Phase::kSetup:
      return t.bytes_of(MsgType::kM1);
    case Phase::kUpload:
      return t.bytes_of(MsgType::kM2);
    case Phase::kEval:
      return t.bytes_of(MsgType::kM3TwoParty) + t.bytes_of(MsgType::kM3ThreeParty) +
             t.bytes_of(MsgType::kM4);
    default:
      return 0;
  }
}

}  // namespace

RunOutcome bench_run(const RunOptions& opts) {
  if (opts.inputs == 0 || opts.dim == 0) fail(ErrorCode::kUsage, "inputs and dim must be >= 1");
  const bool three = opts.protocol == ProtocolKind::kThreeParty;
  const size_t users = three ? std::max<size_t>(1, opts.users) : 1;
  if (users > opts.inputs) fail(ErrorCode::kUsage, "more users than inputs");

  Prng rng = Prng(seed_from_u64(opts.seed)).derive("bench-run");
  const ModelParams model = random_model(rng, opts.dim);
  std::vector<FieldVector> xs;
  for (size_t i = 0; i < opts.inputs; ++i) xs.push_back(random_input(rng, model));

  ProtocolConfig cfg;
  cfg.preset = opts.preset;
  cfg.cipher = opts.cipher;
  cfg.seed = seed_from_u64(opts.seed);
  cfg.transport = opts.transport;
  cfg.decomp_threads = opts.threads;
  cfg.context = std::make_shared<const HheContext>(hhe_params_for(cfg, model));

  RunOutcome out;
  const std::vector<Phase> phases = {Phase::kSetup, Phase::kUpload, Phase::kEval,
                                     Phase::kClassify};
  std::vector<std::vector<double>> times(phases.size());
  Transcript last;
  out.correct = true;
  for (size_t rep = 0; rep < std::max<size_t>(1, opts.repetitions); ++rep) {
    Transcript t;
    std::vector<std::vector<FieldVector>> per_user(users);
    for (size_t i = 0; i < xs.size(); ++i) per_user[i % users].push_back(xs[i]);
    ProtocolSession session = three
                                  ? ProtocolSession::three_party(cfg, per_user, model)
                                  : ProtocolSession::two_party(cfg, xs, model);
    t = session.run();
    if (t.abort) {
      out.abort = t.abort;
      out.correct = false;
      last = t;
      break;
    }
    for (size_t u = 0; u < users; ++u) {
      for (size_t i = 0; i < per_user[u].size(); ++i) {
        if (t.results.at(u).at(i) != std::vector<int64_t>{logit(model, per_user[u][i])}) {
          out.correct = false;
        }
      }
    }
    for (size_t p = 0; p < phases.size(); ++p) times[p].push_back(t.phase_ms(phases[p]));
    last = std::move(t);
  }

  BenchReport& rep = out.report;
  rep.metadata = {{"command", "run"},
                  {"protocol", three ? "3gml" : "2gml"},
                  {"preset", std::string(bfv::preset_name(opts.preset))},
                  {"seed", std::to_string(opts.seed)},
                  {"repetitions", std::to_string(opts.repetitions)},
                  {"dim", std::to_string(opts.dim)},
                  {"users", std::to_string(users)},
                  {"transport", opts.transport == TransportKind::kTcp ? "tcp" : "sim"},
                  {"hardware", hardware_note()}};
  for (size_t p = 0; p < phases.size(); ++p) {
    rep.rows.push_back({std::string(phase_name(phases[p])), phase_parties(last, phases[p]),
                        opts.inputs, median(times[p]), phase_bytes(last, phases[p])});
  }
  return out;
}

BenchReport bench_compare_bfv(const CompareOptions& opts) {
  if (opts.counts.empty()) fail(ErrorCode::kUsage, "no input counts");
  HheParams hp;
  hp.preset = opts.preset;
  hp.cipher = opts.cipher;
  hp.max_inputs = opts.dim;
  const HheContext hc(hp);
  const auto& ctx = hc.bfv();
  Prng rng = Prng(seed_from_u64(opts.seed)).derive("compare-bfv");
  bfv::KeyGenerator gen(ctx, rng.derive("keys"));
  const bfv::PublicKey pk = gen.create_public_key();
  const bfv::BatchEncoder encoder(ctx);
  const bfv::Encryptor encryptor(ctx, pk);
  const size_t per_ct = opts.packed ? std::max<size_t>(1, encoder.slot_count() / opts.dim) : 1;

  const size_t max_count = *std::max_element(opts.counts.begin(), opts.counts.end());
  std::vector<FieldVector> xs;
  for (size_t i = 0; i < max_count; ++i) {
    FieldVector x(opts.dim);
    for (size_t j = 0; j < opts.dim; ++j) x.set(j, int64_t(rng.uniform(16)));
    xs.push_back(std::move(x));
  }

  BenchReport rep;
  rep.metadata = {{"command", "compare-bfv"},
                  {"preset", std::string(bfv::preset_name(opts.preset))},
                  {"seed", std::to_string(opts.seed)},
                  {"repetitions", std::to_string(opts.repetitions)},
                  {"dim", std::to_string(opts.dim)},
                  {"baseline", opts.packed ? "packed" : "one-ciphertext-per-input"},
                  {"hardware", hardware_note()}};
  const std::string bfv_op = opts.packed ? "bfv-upload-packed" : "bfv-upload";
  for (size_t n : opts.counts) {
    std::vector<double> hhe_ms, bfv_ms;
    size_t hhe_bytes = 0, bfv_bytes = 0;
    for (size_t r = 0; r < std::max<size_t>(1, opts.repetitions); ++r) {
      Prng run_rng = rng.derive("run" + std::to_string(n) + "/" + std::to_string(r));
      {
        const auto t0 = SteadyClock::now();
        HheUserSession session(hc, pk, run_rng.derive("hhe"));
        std::vector<SymCiphertext> cts;
        cts.reserve(n);
        for (size_t i = 0; i < n; ++i) cts.push_back(session.encrypt(xs[i]));
        const Bytes payload = encode_upload(cts, session.encrypted_key());
        hhe_ms.push_back(ms_since(t0));
        hhe_bytes = payload.size();
      }
      {
        Prng enc_rng = run_rng.derive("bfv");
        const auto t0 = SteadyClock::now();
        std::vector<bfv::Ciphertext> cts;
        for (size_t start = 0; start < n; start += per_ct) {
          std::vector<uint64_t> slots(encoder.slot_count(), 0);
          const size_t end = std::min(n, start + per_ct);
          for (size_t i = start; i < end; ++i) {
            for (size_t j = 0; j < opts.dim; ++j) {
              slots[(i - start) * opts.dim + j] = xs[i][j];
            }
          }
          cts.push_back(encryptor.encrypt(encoder.encode(slots), enc_rng));
        }
        const Bytes payload = encode_ciphertexts(cts);
        bfv_ms.push_back(ms_since(t0));
        bfv_bytes = payload.size();
      }
    }
    rep.rows.push_back({"hhe-upload", "user", n, median(hhe_ms), hhe_bytes});
    rep.rows.push_back({bfv_op, "user", n, median(bfv_ms), bfv_bytes});
  }
  return rep;
}

}  // namespace hheml
