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

// Command-line front end: keys, protocol runs, benchmarks, data and accuracy.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hheml/bench.h"
#include "hheml/errors.h"
#include "hheml/ml.h"

namespace hheml {
namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

void write_file(const std::filesystem::path& path, const Bytes& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) fail(ErrorCode::kIoError, "write failed: " + path.string());
}

void emit_report(const BenchReport& report, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << report.to_csv();
  } else {
    report.save(path);
    std::cerr << "report written to " << path << "\n";
  }
}

// Same detection rule as read_records_quantized.
bool looks_like_float_csv(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line) && line.find_first_not_of(" \t\r") == std::string::npos) {
  }
  return line.find_first_of(".eE") != std::string::npos;
}

std::string percent_cell(std::optional<double> v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", *v);
  return buf;
}

struct Common {
  std::string preset = "toy";
  uint64_t seed = 1;
  size_t reps = 5;
  size_t threads = 1;
  std::string report;
};

void add_common(CLI::App* cmd, Common& c, bool with_reps) {
  cmd->add_option("--preset", c.preset, "BFV parameter preset: micro, toy or default")
      ->envname("GUARDML_PRESET")
      ->check(CLI::IsMember({"micro", "toy", "default"}))
      ->capture_default_str();
  cmd->add_option("--seed", c.seed, "Seed for all randomness")
      ->envname("GUARDML_SEED")
      ->capture_default_str();
  if (with_reps) {
    cmd->add_option("--reps", c.reps, "Repetitions; times are medians")
        ->envname("GUARDML_REPS")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }
  cmd->add_option("--parallel", c.threads, "Worker threads for transciphering")
      ->envname("GUARDML_THREADS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--report", c.report, "Report path (.csv or .json); stdout when omitted")
      ->envname("GUARDML_REPORT");
}

// Micro only works with the reduced cipher it was sized for.
CipherConfig cipher_for(bfv::Preset p) {
  return p == bfv::Preset::kMicro ? CipherConfig{4, 2} : CipherConfig{};
}

int cmd_keygen(const Common& c, const std::string& out_dir, size_t dim) {
  const bfv::Preset preset = bfv::parse_preset(c.preset);
  HheParams hp;
  hp.preset = preset;
  hp.cipher = cipher_for(preset);
  hp.max_inputs = dim;
  const HheContext hc(hp);
  Prng rng(seed_from_u64(c.seed));
  const HheKeyBundle keys = hhe_keygen(hc, rng);
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  write_file(dir / "pk.bin", keys.pk.serialize());
  write_file(dir / "sk.bin", keys.sk.serialize());
  const Bytes evk = keys.evk.serialize();
  write_file(dir / "evk.bin", evk);
  nlohmann::ordered_json meta = {{"preset", c.preset},
                                 {"max_inputs", dim},
                                 {"seed", c.seed},
                                 {"cipher_t", hp.cipher.t},
                                 {"cipher_rounds", hp.cipher.rounds}};
  std::ofstream(dir / "params.json") << meta.dump(2) << "\n";
  std::cout << "keys written to " << out_dir << " (evk " << evk.size() << " bytes)\n";
  return 0;
}

int cmd_run(const Common& c, const std::string& protocol, size_t inputs, size_t users,
            size_t dim, const std::string& transport) {
  RunOptions o;
  o.protocol = protocol == "3gml" ? ProtocolKind::kThreeParty : ProtocolKind::kTwoParty;
  o.inputs = inputs;
  o.users = users;
  o.dim = dim;
  o.preset = bfv::parse_preset(c.preset);
  o.cipher = cipher_for(o.preset);
  o.seed = c.seed;
  o.transport = transport == "tcp" ? TransportKind::kTcp : TransportKind::kSim;
  o.repetitions = c.reps;
  o.threads = c.threads;
  const RunOutcome out = bench_run(o);
  if (out.abort) {
    std::cerr << "protocol aborted: " << party_name(out.abort->party) << " in "
              << phase_name(out.abort->phase) << ": "
              << error_code_name(out.abort->cause) << " (" << out.abort->detail << ")\n";
    return kExitFailure;
  }
  emit_report(out.report, c.report);
  if (!out.correct) {
    std::cerr << "decrypted results differ from the integer oracle\n";
    return kExitFailure;
  }
  return 0;
}

std::vector<size_t> parse_counts(const std::string& list) {
  std::vector<size_t> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      const unsigned long long v = std::stoull(item, &used);
      if (used != item.size() || v == 0) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      fail(ErrorCode::kUsage, "bad count '" + item + "' in " + list);
    }
  }
  if (out.empty()) fail(ErrorCode::kUsage, "empty count list");
  return out;
}

int cmd_compare(const Common& c, const std::string& counts, size_t dim, bool packed) {
  CompareOptions o;
  o.counts = parse_counts(counts);
  o.dim = dim;
  o.preset = bfv::parse_preset(c.preset);
  o.cipher = cipher_for(o.preset);
  o.seed = c.seed;
  o.repetitions = c.reps;
  o.packed = packed;
  emit_report(bench_compare_bfv(o), c.report);
  return 0;
}

int cmd_gen_data(size_t n, uint64_t seed, const std::string& kind, const std::string& out) {
  if (n == 0) fail(ErrorCode::kUsage, "--n must be at least 1");
  if (kind == "synthetic-ecg") {
    write_ecg_csv(out, synthetic_ecg(n, seed_from_u64(seed)));
  } else {
    Prng rng = Prng(seed_from_u64(seed)).derive("random-vec4");
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorCode::kIoError, "cannot write " + out);
    for (size_t i = 0; i < n; ++i) {
      for (int j = 0; j < 4; ++j) f << (j ? "," : "") << rng.uniform(kQuantMax + 1);
      f << "\n";
    }
    if (!f) fail(ErrorCode::kIoError, "write failed: " + out);
  }
  std::cout << n << " records written to " << out << "\n";
  return 0;
}

int cmd_accuracy(const Common& c, const std::string& data, const std::string& model_path,
                 const std::string& mode, const std::string& sizes) {
  const ModelFile mf = read_model_json(model_path);
  validate_model(mf.model);
  const std::vector<QuantizedRecord> q = read_records_quantized(data);
  std::vector<EcgRecord> floats;
  if (mf.float_model && looks_like_float_csv(data)) floats = read_ecg_csv(data);
  if (!q.empty() && q[0].signal.size() != mf.model.dim) {
    fail(ErrorCode::kLengthMismatch, "records have " + std::to_string(q[0].signal.size()) +
                                         " values but the model expects " +
                                         std::to_string(mf.model.dim));
  }
  const std::vector<size_t> counts =
      sizes.empty() ? std::vector<size_t>{q.size()} : parse_counts(sizes);
  for (size_t n : counts) {
    if (n > q.size()) {
      fail(ErrorCode::kUsage, "asked for " + std::to_string(n) + " records, file has " +
                                  std::to_string(q.size()));
    }
  }
  const bool want_enc = mode == "all" || mode == "encrypted";
  const bool want_plain = mode == "all" || mode == "plain";

  // Encrypted logits for the largest prefix, reused for smaller ones.
  AccuracyReport enc_all;
  const size_t max_n = *std::max_element(counts.begin(), counts.end());
  const std::vector<QuantizedRecord> prefix(q.begin(), q.begin() + ptrdiff_t(max_n));
  if (want_enc) {
    HheParams hp;
    hp.preset = bfv::parse_preset(c.preset);
    hp.cipher = cipher_for(hp.preset);
    hp.max_inputs = mf.model.dim;
    hp.max_outputs = mf.model.n_out;
    const HheContext hc(hp);
    Prng rng(seed_from_u64(c.seed));
    const HheKeyBundle keys = hhe_keygen(hc, rng);
    enc_all = accuracy_encrypted(hc, keys, mf.model, prefix, rng, c.threads);
  }

  BenchReport rep;
  rep.metadata = {{"command", "accuracy"},
                  {"data", data},
                  {"model", model_path},
                  {"preset", c.preset},
                  {"seed", std::to_string(c.seed)}};
  std::cout << "inputs,plain_float,plain_int,encrypted\n";
  for (size_t n : counts) {
    const std::vector<QuantizedRecord> sub(q.begin(), q.begin() + ptrdiff_t(n));
    std::optional<double> pf, pi, en;
    if (want_plain && !floats.empty()) {
      pf = accuracy_float(*mf.float_model,
                          std::vector<EcgRecord>(floats.begin(), floats.begin() + ptrdiff_t(n)))
               .percent();
    }
    if (want_plain) pi = accuracy_plain(mf.model, sub).percent();
    if (want_enc) {
      size_t correct = 0;
      for (size_t i = 0; i < n; ++i) {
        correct += classify(enc_all.logits[i]) == sub[i].label;
      }
      en = 100.0 * double(correct) / double(n);
    }
    std::cout << n << "," << percent_cell(pf) << "," << percent_cell(pi) << ","
              << percent_cell(en) << "\n";
    if (pf) rep.rows.push_back({"plain_float", "-", n, *pf, 0});
    if (pi) rep.rows.push_back({"plain_int", "-", n, *pi, 0});
    if (en) rep.rows.push_back({"encrypted", "user+csp", n, *en, 0});
  }
  if (!c.report.empty()) {
    // Accuracy percentages go in the time column of the shared schema.
    rep.metadata.emplace_back("value_column", "accuracy_percent");
    rep.save(c.report);
  }
  return 0;
}

int cmd_quantize(const std::string& in, const std::string& out, const std::string& model_in,
                 const std::string& model_out, double scale) {
  if (in.empty() && model_in.empty()) {
    fail(ErrorCode::kUsage, "nothing to do: give --in/--out or --model-in/--model-out");
  }
  if (!in.empty()) {
    if (out.empty()) fail(ErrorCode::kUsage, "--in needs --out");
    std::vector<QuantizedRecord> q;
    for (const auto& r : read_ecg_csv(in)) q.push_back(quantize(r));
    write_quantized_csv(out, q);
    std::cout << q.size() << " records quantized to " << out << "\n";
  }
  if (!model_in.empty()) {
    if (model_out.empty()) fail(ErrorCode::kUsage, "--model-in needs --model-out");
    ModelFile mf = read_model_json(model_in);
    if (!mf.float_model) fail(ErrorCode::kParseError, model_in + " has no float weights");
    const double s = scale > 0 ? scale : max_scale(*mf.float_model, true);
    mf.model = quantize_model(*mf.float_model, s);
    write_model_json(model_out, mf);
    std::cout << "model quantized at scale " << s << " to " << model_out << "\n";
  }
  return 0;
}

int cmd_reference_model(const std::string& out) {
  ModelFile mf;
  mf.model = reference_model();
  mf.float_model = reference_float_model();
  write_model_json(out, mf);
  std::cout << "reference model written to " << out << "\n";
  return 0;
}

int run_main(int argc, char** argv) {
  CLI::App app{"Encrypted linear inference over hybrid homomorphic encryption"};
  app.require_subcommand(1);
  Common common;

  auto* keygen = app.add_subcommand("keygen", "Generate public, secret and evaluation keys");
  std::string key_dir;
  size_t key_dim = 4;
  add_common(keygen, common, false);
  keygen->add_option("--out", key_dir, "Output directory")->required();
  keygen->add_option("--dim", key_dim, "Longest input vector the keys must support")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  auto* run = app.add_subcommand("run", "Run a protocol on random inputs and time each phase");
  std::string protocol, transport = "sim";
  size_t inputs = 1, users = 1, dim = 4;
  run->add_option("protocol", protocol, "2gml or 3gml")
      ->required()
      ->check(CLI::IsMember({"2gml", "3gml"}));
  run->add_option("--inputs", inputs, "Number of input vectors")
      ->envname("GUARDML_INPUTS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run->add_option("--users", users, "Data owners in 3gml")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run->add_option("--dim", dim, "Input vector length")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run->add_option("--transport", transport, "sim (in-process) or tcp (loopback sockets)")
      ->envname("GUARDML_TRANSPORT")
      ->check(CLI::IsMember({"sim", "tcp"}))
      ->capture_default_str();
  add_common(run, common, true);

  auto* compare = app.add_subcommand("compare-bfv", "Hybrid vs plain BFV upload cost");
  std::string counts = "1,50,100,150,200,250,300";
  bool packed = false;
  size_t cmp_dim = 4;
  compare->add_option("--inputs", counts, "Comma-separated input counts")
      ->envname("GUARDML_COUNTS")
      ->capture_default_str();
  compare->add_option("--dim", cmp_dim, "Input vector length")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  compare->add_flag("--packed", packed, "Pack many inputs per BFV ciphertext");
  add_common(compare, common, true);

  auto* gen = app.add_subcommand("gen-data", "Write a deterministic dataset");
  size_t gen_n = 0;
  std::string kind = "synthetic-ecg", gen_out;
  gen->add_option("--n", gen_n, "Number of records")->required();
  gen->add_option("--seed", common.seed, "Seed")->envname("GUARDML_SEED")->capture_default_str();
  gen->add_option("--kind", kind, "synthetic-ecg or random-vec4")
      ->check(CLI::IsMember({"synthetic-ecg", "random-vec4"}))
      ->capture_default_str();
  gen->add_option("--out", gen_out, "Output CSV")->required();

  auto* acc = app.add_subcommand("accuracy", "Plain and encrypted classification accuracy");
  std::string data, model_path, mode = "all", sizes;
  acc->add_option("--data", data, "Record CSV (float or quantized)")->required();
  acc->add_option("--model", model_path, "Model JSON")->required();
  acc->add_option("--mode", mode, "all, plain or encrypted")
      ->check(CLI::IsMember({"all", "plain", "encrypted"}))
      ->capture_default_str();
  acc->add_option("--sizes", sizes, "Comma-separated prefix sizes, e.g. 500,1000,2000");
  add_common(acc, common, false);

  auto* quant = app.add_subcommand("quantize", "Quantize signals and/or a float model");
  std::string q_in, q_out, m_in, m_out;
  double scale = 0;
  quant->add_option("--in", q_in, "Float ECG CSV");
  quant->add_option("--out", q_out, "Quantized CSV");
  quant->add_option("--model-in", m_in, "Model JSON with float_w/float_b");
  quant->add_option("--model-out", m_out, "Quantized model JSON");
  quant->add_option("--scale", scale, "Weight scale; default is the largest overflow-free one");

  auto* ref = app.add_subcommand("reference-model", "Write the reference model for the "
                                                    "synthetic data");
  std::string ref_out;
  ref->add_option("--out", ref_out, "Model JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*keygen) return cmd_keygen(common, key_dir, key_dim);
    if (*run) return cmd_run(common, protocol, inputs, users, dim, transport);
    if (*compare) return cmd_compare(common, counts, cmp_dim, packed);
    if (*gen) return cmd_gen_data(gen_n, common.seed, kind, gen_out);
    if (*acc) return cmd_accuracy(common, data, model_path, mode, sizes);
    if (*quant) return cmd_quantize(q_in, q_out, m_in, m_out, scale);
    if (*ref) return cmd_reference_model(ref_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::kUsage ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace
}  // namespace hheml

int main(int argc, char** argv) { return hheml::run_main(argc, argv); }
