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

// Timing and size measurements behind the command-line front end and the
// acceptance checks: protocol phase timings and the hybrid vs plain BFV
// upload comparison.

#ifndef HHEML_BENCH_H_
#define HHEML_BENCH_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hheml/bfv/params.h"
#include "hheml/protocol.h"

namespace hheml {

struct BenchRow {
  std::string op;  // phase name or operation
  std::string party;
  size_t input_count = 0;
  double wall_time_ms = 0;  // median over repetitions
  size_t bytes_sent = 0;
  bool operator==(const BenchRow&) const = default;
};

struct BenchReport {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<BenchRow> rows;

  std::string meta(const std::string& key) const;
  const BenchRow* find(const std::string& op, size_t input_count) const;

  // "# key=value" metadata lines, then a header and one line per row.
  std::string to_csv() const;
  static BenchReport parse_csv(const std::string& text);
  std::string to_json() const;
  static BenchReport parse_json(const std::string& text);
  // Format by extension: .json or CSV otherwise.
  void save(const std::string& path) const;
  static BenchReport load(const std::string& path);
  bool operator==(const BenchReport&) const = default;
};

// CPU model and thread count, for report metadata.
std::string hardware_note();
double median(std::vector<double> v);
Seed seed_from_u64(uint64_t seed);

struct LinearFit {
  double intercept = 0;
  double slope = 0;
  double r2 = 0;
};
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

enum class ProtocolKind : uint8_t { kTwoParty, kThreeParty };

struct RunOptions {
  ProtocolKind protocol = ProtocolKind::kTwoParty;
  size_t inputs = 1;
  size_t users = 1;  // three-party only; inputs are dealt round-robin
  size_t dim = 4;
  bfv::Preset preset = bfv::Preset::kToy;
  CipherConfig cipher{};
  uint64_t seed = 1;
  TransportKind transport = TransportKind::kSim;
  size_t repetitions = 1;
  size_t threads = 1;
};

struct RunOutcome {
  BenchReport report;  // exactly one row per phase: Setup, Upload, Eval, Classify
  bool correct = false;  // every result equals the integer oracle
  std::optional<AbortInfo> abort;
};

// Random in-range model and 4-bit inputs (redrawn until every logit is
// representable), then the full protocol `repetitions` times.
RunOutcome bench_run(const RunOptions& opts);

struct CompareOptions {
  std::vector<size_t> counts = {1, 50, 100, 150, 200, 250, 300};
  size_t dim = 4;
  bfv::Preset preset = bfv::Preset::kToy;
  CipherConfig cipher{};
  uint64_t seed = 1;
  size_t repetitions = 5;
  // Batched baseline: pack as many inputs per BFV ciphertext as fit.
  bool packed = false;
};

// Rows "hhe-upload" (symmetric encryption of every input plus one BFV
// encryption of the key) and "bfv-upload" (one BFV encryption per input, or
// packed), each with the serialized upload payload size.
BenchReport bench_compare_bfv(const CompareOptions& opts);

}  // namespace hheml

#endif  // HHEML_BENCH_H_
