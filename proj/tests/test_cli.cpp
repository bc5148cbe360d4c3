// Copyright 2026 The almqr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "almqr/runner.hpp"

namespace fs = std::filesystem;
using almqr::run::json;

namespace {

struct Capture {
  int code;
  std::string out;
};

Capture invoke(const std::string& args) {
  const std::string cmd = std::string(ALMQR_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  Capture c{-1, {}};
  if (!p) return c;
  char buf[4096];
  std::size_t k;
  while ((k = fread(buf, 1, sizeof buf, p)) > 0) c.out.append(buf, k);
  const int status = pclose(p);
  c.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return c;
}

fs::path scratch(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("almqr-cli-" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Runner, QrCurveOnSquareMap) {
  const auto o = almqr::run::run(
      json{{"check", "qr-curve"}, {"map", {{"map", "power"}, {"k", 2}}}, {"samples", 2000}, {"seed", 5}});
  EXPECT_TRUE(o.pass);
  EXPECT_NEAR(o.result["max_ratio"].get<double>(), 1.0, 1e-9);
}

TEST(Runner, ComassTraceVolIsOne) {
  for (int n : {2, 3})
    for (int d : {2, 3}) {
      const auto o = almqr::run::run(json{{"check", "comass"}, {"form", {{"kind", "trace_vol"}, {"n", n}, {"d", d}}}});
      EXPECT_TRUE(o.pass) << n << "," << d;
      EXPECT_NEAR(o.result["value"].get<double>(), 1.0, 1e-6);
    }
}

TEST(Runner, UnknownCheckIsInvalidArgument) {
  EXPECT_THROW(almqr::run::run(json{{"check", "nope"}}), almqr::InvalidArgument);
  EXPECT_THROW(almqr::run::run(json{{"map", {{"map", "power"}, {"k", 2}}}}), almqr::InvalidArgument);
}

TEST(Runner, RecordCarriesProvenance) {
  const json cfg{{"check", "comass"}, {"form", {{"kind", "trace_vol"}, {"n", 2}, {"d", 2}}}};
  const auto rec = almqr::run::make_record(cfg, almqr::run::run(cfg), 0.5);
  for (const char* k : {"schema_version", "tool_version", "claim_id", "claim", "check", "inputs_digest", "config",
                        "pass", "thresholds", "result", "timestamp"})
    EXPECT_TRUE(rec.contains(k)) << k;
  EXPECT_EQ(rec["claim_id"], "lemma-comass-natural-form");
  EXPECT_EQ(rec["inputs_digest"], almqr::io::digest(cfg.dump()));
}

TEST(Runner, SuiteMarksErrorsAndFailures) {
  const json entries = json::array({
      {{"name", "ok"}, {"check", "comass"}, {"form", {{"kind", "trace_vol"}, {"n", 2}, {"d", 2}}}},
      {{"name", "bad"}, {"check", "qr-curve"}, {"map", {{"map", "nope"}}}},
  });
  const auto rows = almqr::run::run_suite(entries, 2, {});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].status, "PASS");
  EXPECT_EQ(rows[1].status, "ERROR");
  const json s = almqr::run::suite_json(rows);
  EXPECT_NE(almqr::run::suite_markdown(rows).find("| ERROR |"), std::string::npos);
  EXPECT_TRUE(s.is_object() || s.is_array());
}

TEST(Cli, MalformedMapExitsTwoWithoutReport) {
  const fs::path d = scratch("malformed");
  const auto c = invoke("verify qr-curve --map '{\"map\":\"nope\"}' --out " + (d / "r.json").string());
  EXPECT_EQ(c.code, 2);
  EXPECT_FALSE(fs::exists(d / "r.json"));
}

TEST(Cli, UnparsableRegionExitsTwo) {
  const auto c = invoke("verify qr-curve --map '{\"map\":\"power\",\"k\":2}' --region 'disk:1'");
  EXPECT_EQ(c.code, 2);
}

TEST(Cli, QrCurveConfigPasses) {
  const fs::path d = scratch("qr");
  write_file(d / "c.json", R"({"check": "qr-curve", "map": {"map": "power", "k": 2}, "samples": 500, "seed": 1})");
  const auto c = invoke("run --config " + (d / "c.json").string() + " --out " + (d / "r.json").string());
  EXPECT_EQ(c.code, 0);
  const json rec = json::parse(read_file(d / "r.json"));
  EXPECT_TRUE(rec["pass"].get<bool>());
  EXPECT_NEAR(rec["result"]["max_ratio"].get<double>(), 1.0, 1e-9);
}

TEST(Cli, ComassSubcommand) {
  const auto c = invoke("form comass --form '{\"kind\":\"trace_vol\",\"n\":3,\"d\":2}'");
  ASSERT_EQ(c.code, 0);
  EXPECT_NEAR(json::parse(c.out)["result"]["value"].get<double>(), 1.0, 1e-6);
}

TEST(Cli, OutputIsDeterministicApartFromTimestamp) {
  const std::string args = "verify qr-curve --map '{\"map\":\"power\",\"k\":3}' --samples 300 --seed 42";
  json a = json::parse(invoke(args).out), b = json::parse(invoke(args).out);
  a.erase("timestamp");
  b.erase("timestamp");
  EXPECT_EQ(a.dump(), b.dump());
}

TEST(Cli, CsvFormat) {
  const auto c = invoke("inverse --map '{\"map\":\"power\",\"k\":2}' --y '[1,0]' --format csv");
  ASSERT_EQ(c.code, 0);
  EXPECT_EQ(c.out.substr(0, c.out.find('\n')), "index,x0,x1");
  EXPECT_EQ(std::count(c.out.begin(), c.out.end(), '\n'), 3);
}

TEST(Cli, EmptySuitePasses) {
  const fs::path d = scratch("empty");
  write_file(d / "m.json", "[]");
  const auto c = invoke("suite --manifest " + (d / "m.json").string() + " --out " + (d / "out").string());
  EXPECT_EQ(c.code, 0);
  EXPECT_TRUE(fs::exists(d / "out" / "summary.md"));
  EXPECT_TRUE(fs::exists(d / "out" / "summary.json"));
}

TEST(Cli, FailingToleranceGivesFailRow) {
  const fs::path d = scratch("fail");
  write_file(d / "m.json", R"({"entries": [
    {"name": "comass", "check": "comass", "form": {"kind": "trace_vol", "n": 2, "d": 2}},
    {"name": "tight-ring", "check": "modulus", "region": "annulus:1,2", "grid": 16, "curves": 16, "tol": 1e-9}
  ]})");
  const auto c = invoke("suite --manifest " + (d / "m.json").string() + " --out " + (d / "out").string());
  EXPECT_EQ(c.code, 1);
  const std::string md = read_file(d / "out" / "summary.md");
  EXPECT_NE(md.find("| FAIL |"), std::string::npos);
  EXPECT_TRUE(fs::exists(d / "out" / "000-comass.json"));
}

TEST(Cli, UnknownSubcommandIsUsageError) { EXPECT_NE(invoke("frobnicate").code, 0); }
