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

// Plaintext side of encrypted ECG classification: 4-bit quantization, the
// integer linear model and its range checks, classification, accuracy, and
// a deterministic two-class synthetic ECG generator with its reference model.

#ifndef HHEML_ML_H_
#define HHEML_ML_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hheml/field.h"
#include "hheml/hhe.h"
#include "hheml/model.h"
#include "hheml/random.h"

namespace hheml {

inline constexpr size_t kEcgLength = 128;
inline constexpr int64_t kQuantMax = 15;

enum class Label : uint8_t { kNormal = 0, kDiseased = 1 };

struct EcgRecord {
  std::vector<double> signal;  // kEcgLength values in [0, 1]
  Label label = Label::kNormal;
};

struct QuantizedRecord {
  std::vector<int64_t> signal;  // kEcgLength values in [0, 15]
  Label label = Label::kNormal;
  FieldVector as_field() const;
};

// q_i = floor(15 x_i + 1/2) after clamping x_i to [0, 1].
int64_t quantize_value(double x);
QuantizedRecord quantize(const EcgRecord& r);

struct RangeIssue {
  enum class Kind : uint8_t { kWeight, kBias, kAccumulator };
  Kind kind = Kind::kWeight;
  size_t row = 0;
  size_t col = 0;  // unused for biases and accumulators
  int64_t value = 0;  // offending parameter, or the worst-case logit
};

struct ValidationOptions {
  // Also require every logit over x in [0, input_max]^dim to stay in the
  // centered field range (the per-row reduction width).
  bool check_accumulator = false;
  int64_t input_max = kQuantMax;
};

std::vector<RangeIssue> check_model(const ModelParams& m,
                                    const ValidationOptions& opts = {});
// Throws kRangeViolation listing the offending indices.
void validate_model(const ModelParams& m, const ValidationOptions& opts = {});

// Worst-case logits of row `row` over x in [0, input_max]^dim.
int64_t max_logit(const ModelParams& m, size_t row, int64_t input_max = kQuantMax);
int64_t min_logit(const ModelParams& m, size_t row, int64_t input_max = kQuantMax);

// Exact w q + b per output, no modular reduction.
std::vector<int64_t> forward_int(const ModelParams& m, std::span<const int64_t> q);
std::vector<int64_t> forward_int(const ModelParams& m, const QuantizedRecord& q);
// The same computed in Z_p and centered.
std::vector<int64_t> forward_field(const ModelParams& m, std::span<const int64_t> q);

// Diseased iff logit >= 0 (sigmoid(0) = 1/2 counts as diseased).
Label classify(int64_t logit);

// Float model over unquantized signals in [0, 1].
struct FloatModel {
  size_t n_out = 1;
  size_t dim = 0;
  std::vector<double> w;
  std::vector<double> b;
};

Label classify_float(const FloatModel& m, std::span<const double> x);

// Integer model for 4-bit inputs: w = round(scale w_f), b = round(15 scale
// b_f), clamped to the parameter range.
ModelParams quantize_model(const FloatModel& fm, double scale);
// Largest scale keeping every parameter in range and, when requested, every
// logit over the 4-bit input box inside the field range.
double max_scale(const FloatModel& fm, bool bound_accumulator);

struct AccuracyReport {
  size_t correct = 0;
  size_t total = 0;
  std::vector<int64_t> logits;  // first output per record
  double percent() const { return total ? 100.0 * double(correct) / double(total) : 0; }
};

enum class AccuracyMode : uint8_t { kPlainInt, kEncrypted };

AccuracyReport accuracy_plain(const ModelParams& m,
                              const std::vector<QuantizedRecord>& records);
AccuracyReport accuracy_float(const FloatModel& m, const std::vector<EcgRecord>& records);
// Every record goes through symmetric encryption, transciphering, encrypted
// evaluation and decryption under `keys`.
AccuracyReport accuracy_encrypted(const HheContext& hc, const HheKeyBundle& keys,
                                  const ModelParams& m,
                                  const std::vector<QuantizedRecord>& records,
                                  Prng& rng, size_t threads = 1);
// Convenience: encrypted mode builds a layout for `m` under `preset`.
double accuracy(const ModelParams& m, const std::vector<QuantizedRecord>& records,
                AccuracyMode mode, bfv::Preset preset = bfv::Preset::kToy,
                const Seed& seed = Seed{});

// ---- synthetic data ----

struct SyntheticEcgOptions {
  double diseased_fraction = 0.4;
  double noise = 0.10;
  int max_shift = 3;
};

// Deterministic in `seed`.
std::vector<EcgRecord> synthetic_ecg(size_t n, const Seed& seed,
                                     const SyntheticEcgOptions& opts = {});
// Matched-filter model for the generator's two classes.
FloatModel reference_float_model();
// reference_float_model quantized so that no 4-bit input can overflow.
ModelParams reference_model();

// ---- file formats ----

// One record per line: kEcgLength comma-separated values then the label.
std::vector<EcgRecord> read_ecg_csv(const std::string& path);
void write_ecg_csv(const std::string& path, const std::vector<EcgRecord>& records);
std::vector<QuantizedRecord> read_quantized_csv(const std::string& path);
void write_quantized_csv(const std::string& path,
                         const std::vector<QuantizedRecord>& records);
// Loads a CSV of either kind, quantizing float signals.
std::vector<QuantizedRecord> read_records_quantized(const std::string& path);

// {"n_out":, "dim":, "w": [...], "b": [...]} with optional float reference
// arrays "float_w", "float_b". A file with only the float arrays is quantized
// on load at max_scale(.., true).
struct ModelFile {
  ModelParams model;
  std::optional<FloatModel> float_model;
};
ModelFile read_model_json(const std::string& path);
void write_model_json(const std::string& path, const ModelFile& file);

}  // namespace hheml

#endif  // HHEML_ML_H_
