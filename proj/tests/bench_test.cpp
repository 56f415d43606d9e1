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

#include <cmath>
#include <cstdio>
#include <filesystem>

#include <gtest/gtest.h>

#include "hheml/errors.h"

namespace hheml {
namespace {

BenchReport sample_report() {
  BenchReport r;
  r.metadata = {{"command", "run"}, {"hardware", "cpu x; 1 threads"}, {"note", "a=b"}};
  r.rows = {{"Setup", "user+csp", 3, 12.5, 1000},
            {"Eval", "csp", 3, 0.1 + 0.2, 77},
            {"Classify", "user", 3, 1e-9, 0}};
  return r;
}

RunOptions micro_run(ProtocolKind kind, size_t inputs, size_t users) {
  RunOptions o;
  o.protocol = kind;
  o.inputs = inputs;
  o.users = users;
  o.preset = bfv::Preset::kMicro;
  o.cipher = CipherConfig{4, 2};
  o.seed = 7;
  return o;
}

TEST(Report, CsvRoundTripIsExact) {
  const BenchReport r = sample_report();
  const std::string csv = r.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "# command=run");
  EXPECT_NE(csv.find("\nop,party,input_count,wall_time_ms,bytes_sent\n"), std::string::npos);
  EXPECT_EQ(BenchReport::parse_csv(csv), r);
}

TEST(Report, JsonRoundTripIsExact) {
  const BenchReport r = sample_report();
  EXPECT_EQ(BenchReport::parse_json(r.to_json()), r);
}

TEST(Report, SaveAndLoadPickFormatByExtension) {
  const BenchReport r = sample_report();
  const auto dir = std::filesystem::temp_directory_path();
  for (const char* name : {"hheml_bench_test.csv", "hheml_bench_test.json"}) {
    const std::string path = (dir / name).string();
    r.save(path);
    EXPECT_EQ(BenchReport::load(path), r) << name;
    std::remove(path.c_str());
  }
}

TEST(Report, MalformedInputIsParseError) {
  for (const char* bad : {"", "x,y\n", "op,party,input_count,wall_time_ms,bytes_sent\na,b,c\n",
                          "op,party,input_count,wall_time_ms,bytes_sent\na,b,x,1,2\n"}) {
    try {
      BenchReport::parse_csv(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kParseError);
    }
  }
  EXPECT_THROW(BenchReport::parse_json("{\"rows\": 3}"), Error);
}

TEST(Report, FindAndMeta) {
  const BenchReport r = sample_report();
  EXPECT_EQ(r.meta("note"), "a=b");
  EXPECT_EQ(r.meta("absent"), "");
  ASSERT_NE(r.find("Eval", 3), nullptr);
  EXPECT_EQ(r.find("Eval", 3)->bytes_sent, 77u);
  EXPECT_EQ(r.find("Eval", 4), nullptr);
}

TEST(Stats, Median) {
  EXPECT_EQ(median({}), 0);
  EXPECT_EQ(median({5}), 5);
  EXPECT_EQ(median({3, 1, 2}), 2);
  EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
}

TEST(Stats, FitRecoversExactLine) {
  std::vector<double> x, y;
  for (int i = 0; i < 7; ++i) {
    x.push_back(i * 50.0);
    y.push_back(3.0 + 0.25 * i * 50.0);
  }
  const LinearFit f = fit_line(x, y);
  EXPECT_NEAR(f.slope, 0.25, 1e-12);
  EXPECT_NEAR(f.intercept, 3.0, 1e-9);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
}

TEST(Stats, FitMatchesNormalEquations) {
  // Closed form for three points, solved by hand.
  const LinearFit f = fit_line({0, 1, 2}, {1, 2, 4});
  EXPECT_NEAR(f.slope, 1.5, 1e-12);
  EXPECT_NEAR(f.intercept, 5.0 / 6.0, 1e-12);
  EXPECT_NEAR(f.r2, 1 - (1.0 / 36 + 4.0 / 36 + 1.0 / 36) / (14.0 / 3), 1e-12);
  EXPECT_THROW(fit_line({1}, {1}), Error);
}

TEST(Stats, SeedFromU64IsLittleEndian) {
  const Seed s = seed_from_u64(0x0102030405060708ull);
  EXPECT_EQ(s[0], 0x08);
  EXPECT_EQ(s[7], 0x01);
  for (size_t i = 8; i < s.size(); ++i) EXPECT_EQ(s[i], 0);
}

TEST(Run, TwoPartyReportsFourPhases) {
  const RunOutcome out = bench_run(micro_run(ProtocolKind::kTwoParty, 3, 1));
  EXPECT_TRUE(out.correct);
  EXPECT_FALSE(out.abort);
  ASSERT_EQ(out.report.rows.size(), 4u);
  const char* phases[] = {"Setup", "Upload", "Eval", "Classify"};
  for (size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(out.report.rows[i].op, phases[i]);
    EXPECT_EQ(out.report.rows[i].input_count, 3u);
    EXPECT_GE(out.report.rows[i].wall_time_ms, 0);
  }
  EXPECT_GT(out.report.rows[0].bytes_sent, 0u);
  EXPECT_GT(out.report.rows[1].bytes_sent, 0u);
  EXPECT_GT(out.report.rows[2].bytes_sent, 0u);
  EXPECT_EQ(out.report.rows[3].bytes_sent, 0u);
  EXPECT_EQ(out.report.meta("protocol"), "2gml");
  EXPECT_EQ(out.report.meta("preset"), "micro");
  EXPECT_FALSE(out.report.meta("hardware").empty());
}

TEST(Run, ThreePartyDealsInputsAcrossUsers) {
  const RunOutcome out = bench_run(micro_run(ProtocolKind::kThreeParty, 5, 2));
  EXPECT_TRUE(out.correct);
  ASSERT_EQ(out.report.rows.size(), 4u);
  EXPECT_EQ(out.report.meta("users"), "2");
  EXPECT_NE(out.report.rows[2].party.find("csp"), std::string::npos);
  EXPECT_THROW(bench_run(micro_run(ProtocolKind::kThreeParty, 1, 2)), Error);
}

TEST(Run, UploadBytesGrowWithInputs) {
  const auto a = bench_run(micro_run(ProtocolKind::kTwoParty, 1, 1));
  const auto b = bench_run(micro_run(ProtocolKind::kTwoParty, 4, 1));
  EXPECT_LT(a.report.rows[1].bytes_sent, b.report.rows[1].bytes_sent);
  // m1 does not depend on the input count.
  EXPECT_EQ(a.report.rows[0].bytes_sent, b.report.rows[0].bytes_sent);
}

TEST(Compare, HybridUploadIsSmallerPerInput) {
  CompareOptions o;
  o.counts = {1, 4, 8};
  o.preset = bfv::Preset::kMicro;
  o.cipher = CipherConfig{4, 2};
  o.repetitions = 1;
  const BenchReport r = bench_compare_bfv(o);
  ASSERT_EQ(r.rows.size(), 6u);
  const auto* h1 = r.find("hhe-upload", 1);
  const auto* h8 = r.find("hhe-upload", 8);
  const auto* b1 = r.find("bfv-upload", 1);
  const auto* b8 = r.find("bfv-upload", 8);
  ASSERT_TRUE(h1 && h8 && b1 && b8);
  // Each extra BFV input costs a full ciphertext; each extra hybrid input
  // costs a few field elements.
  EXPECT_GT(b8->bytes_sent - b1->bytes_sent, 7 * (b1->bytes_sent / 2));
  EXPECT_LT(h8->bytes_sent - h1->bytes_sent, 7 * 64u);

  o.packed = true;
  const BenchReport p = bench_compare_bfv(o);
  ASSERT_NE(p.find("bfv-upload-packed", 8), nullptr);
  EXPECT_EQ(p.find("bfv-upload-packed", 8)->bytes_sent,
            p.find("bfv-upload-packed", 1)->bytes_sent);
}

}  // namespace
}  // namespace hheml
