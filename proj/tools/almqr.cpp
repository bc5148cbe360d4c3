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

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "almqr/runner.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

enum Exit { kPass = 0, kFail = 1, kUsage = 2, kNumerical = 3 };

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw almqr::InvalidArgument("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw almqr::InvalidArgument("'" + path + "' is not valid JSON: " + e.what());
  }
}

// Inline JSON, or a path to a JSON file.
json json_arg(const std::string& flag, const std::string& text) {
  const auto first = text.find_first_not_of(" \t\n");
  if (first != std::string::npos && (text[first] == '{' || text[first] == '[')) {
    try {
      return json::parse(text);
    } catch (const json::parse_error& e) {
      throw almqr::InvalidArgument("--" + flag + ": invalid JSON: " + e.what());
    }
  }
  return read_json_file(text);
}

std::vector<double> number_list(const std::string& flag, const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      v.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw almqr::InvalidArgument("--" + flag + ": bad number '" + tok + "'");
    }
  }
  return v;
}

// Flags of one subcommand collected as strings and converted into config
// fields on demand.
struct Flags {
  std::map<std::string, std::string> json_flags, string_flags, list_flags;
  std::map<std::string, double> number_flags;
  std::map<std::string, long long> int_flags;
  std::map<std::string, std::string> raw;
  std::map<std::string, CLI::Option*> options;

  void add_json(CLI::App* app, const std::string& name, const std::string& help) {
    options[name] = app->add_option("--" + name, json_flags[name], help + " (inline JSON or file)");
  }
  void add_string(CLI::App* app, const std::string& name, const std::string& help) {
    options[name] = app->add_option("--" + name, string_flags[name], help);
  }
  void add_list(CLI::App* app, const std::string& name, const std::string& help) {
    options[name] = app->add_option("--" + name, list_flags[name], help + " (comma separated)");
  }
  void add_number(CLI::App* app, const std::string& name, const std::string& help) {
    options[name] = app->add_option("--" + name, number_flags[name], help);
  }
  void add_int(CLI::App* app, const std::string& name, const std::string& help) {
    options[name] = app->add_option("--" + name, int_flags[name], help);
  }

  json to_config() const {
    json c = json::object();
    for (const auto& [name, opt] : options) {
      if (opt->count() == 0) continue;
      const std::string key = name == "y-point" ? "y" : name;
      if (json_flags.count(name)) c[key] = json_arg(name, json_flags.at(name));
      else if (string_flags.count(name)) c[key] = string_flags.at(name);
      else if (list_flags.count(name)) c[key] = number_list(name, list_flags.at(name));
      else if (number_flags.count(name)) c[key] = number_flags.at(name);
      else if (int_flags.count(name)) c[key] = int_flags.at(name);
    }
    return c;
  }
};

struct Common {
  std::string config_path, out, format = "json";
  unsigned long long seed = 0;
  CLI::Option* seed_opt = nullptr;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config; its fields override flags");
    app->add_option("--out", out, "write the report here instead of stdout");
    app->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    seed_opt = app->add_option("--seed", seed, "64-bit seed");
  }
};

struct Command {
  CLI::App* app;
  std::string check;
  Flags flags;
  Common common;
};

int emit(const json& config, const Common& common) {
  const auto t0 = std::chrono::steady_clock::now();
  const almqr::run::Outcome o = almqr::run::run(config);
  const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const std::string text =
      common.format == "csv" ? o.csv : almqr::run::make_record(config, o, runtime).dump(2) + "\n";
  if (common.out.empty()) std::cout << text;
  else almqr::run::write_atomic(common.out, text);
  return o.pass ? kPass : kFail;
}

int run_suite(const std::string& manifest_path, int jobs, const std::string& out_dir) {
  json m = read_json_file(manifest_path);
  const json entries = m.is_object() && m.contains("entries") ? m["entries"] : m;
  const auto rows = almqr::run::run_suite(entries, jobs, out_dir);
  const std::string md = almqr::run::suite_markdown(rows);
  std::cout << md;
  if (!out_dir.empty()) {
    almqr::run::write_atomic(fs::path(out_dir) / "summary.md", md);
    almqr::run::write_atomic(fs::path(out_dir) / "summary.json", almqr::run::suite_json(rows).dump(2) + "\n");
  }
  for (const auto& r : rows)
    if (!r.pass) return kFail;
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"almqr: numerical verification of inequalities for multi-valued inverses of branched covers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ALMQR_VERSION);

  std::vector<std::unique_ptr<Command>> commands;
  auto command = [&](CLI::App* parent, const std::string& name, const std::string& check, const std::string& help) {
    auto c = std::make_unique<Command>();
    c->app = parent->add_subcommand(name, help);
    c->check = check;
    c->common.attach(c->app);
    commands.push_back(std::move(c));
    return commands.back().get();
  };

  Command* inv = command(&app, "inverse", "inverse", "print minv f(y), H(y) and the generalized inverse");
  inv->flags.add_json(inv->app, "map", "map spec");
  inv->flags.add_json(inv->app, "y", "point [y1, .., yn]");

  Command* dist = command(&app, "distance", "distance", "Almgren distance between two points");
  dist->flags.add_json(dist->app, "p", "point {n, points}");
  dist->flags.add_json(dist->app, "q", "point {n, points}");

  CLI::App* form = app.add_subcommand("form", "differential form tools");
  form->require_subcommand(1);
  Command* com = command(form, "comass", "comass", "comass of a form at a point");
  com->flags.add_json(com->app, "form", "form spec");
  com->flags.add_json(com->app, "point", "base point in (R^n)^d");
  com->flags.add_number(com->app, "expect", "expected value");
  com->flags.add_number(com->app, "tol", "tolerance against --expect");

  CLI::App* verify = app.add_subcommand("verify", "run a verifier");
  verify->require_subcommand(1);
  Command* qr = command(verify, "qr-curve", "qr-curve", "QR-curve ratio over sampled points");
  qr->flags.add_json(qr->app, "map", "map spec");
  qr->flags.add_string(qr->app, "region", "annulus:a,b | ball:r,c.. | box:lo..,hi..");
  qr->flags.add_int(qr->app, "samples", "sample count");
  qr->flags.add_number(qr->app, "tol", "ratio tolerance");

  Command* st = command(verify, "stokes", "stokes", "weak Stokes identity for minv f");
  st->flags.add_json(st->app, "map", "map spec");
  st->flags.add_string(st->app, "region", "domain of minv f");
  st->flags.add_json(st->app, "form", "invariant form spec");
  st->flags.add_json(st->app, "testform", "{center, radius, beta}");
  st->flags.add_int(st->app, "grid", "finest Gauss order G (levels G/4, G/2, G)");
  st->flags.add_number(st->app, "tol", "relative discrepancy tolerance");

  Command* gq = command(verify, "geom-qc", "geom-qc", "Mod_2 of a family against its image under minv f");
  gq->flags.add_json(gq->app, "map", "map spec");
  gq->flags.add_json(gq->app, "family", "family spec");
  gq->flags.add_int(gq->app, "grid", "cells per side");
  gq->flags.add_number(gq->app, "slack", "discretization slack");

  Command* ug = command(verify, "upper-gradient", "upper-gradient", "upper-gradient sandwich along curves");
  ug->flags.add_json(ug->app, "map", "map spec");
  ug->flags.add_json(ug->app, "family", "family spec");
  ug->flags.add_int(ug->app, "samples_per_curve", "samples per curve");
  ug->flags.add_number(ug->app, "tol", "relative tolerance");

  Command* ar = command(verify, "area", "area", "area formula and energy bound over an annulus");
  ar->flags.add_json(ar->app, "map", "map spec");
  ar->flags.add_string(ar->app, "field", "one | norm2 | inv-norm-pow-n");
  ar->flags.add_number(ar->app, "inner", "inner radius");
  ar->flags.add_number(ar->app, "outer", "outer radius");
  ar->flags.add_number(ar->app, "tol", "relative discrepancy tolerance");

  Command* pm = command(verify, "preimage-measure", "preimage-measure", "preimage measure against d H^n");
  pm->flags.add_json(pm->app, "map", "map spec");
  pm->flags.add_json(pm->app, "y", "ball center minv f(y)");
  pm->flags.add_json(pm->app, "z", "ball center as a point {n, points}");
  pm->flags.add_number(pm->app, "r", "ball radius");
  pm->flags.add_int(pm->app, "N", "Monte Carlo samples");

  Command* mq = command(verify, "metric-qc", "metric-qc", "metric distortion of minv f against fiber distortions");
  mq->flags.add_json(mq->app, "map", "map spec");
  mq->flags.add_json(mq->app, "y", "base point");
  mq->flags.add_list(mq->app, "radii", "radii");
  mq->flags.add_int(mq->app, "directions", "sampled directions");

  Command* gi = command(verify, "generalized-inverse", "generalized-inverse", "fiber sums of polynomial maps");
  gi->flags.add_json(gi->app, "map", "map spec");
  gi->flags.add_string(gi->app, "region", "sampling region");
  gi->flags.add_int(gi->app, "samples", "sample count");

  Command* mo = command(verify, "monodromy", "monodromy", "lift a circle and report the fiber permutation");
  mo->flags.add_json(mo->app, "map", "map spec");
  mo->flags.add_json(mo->app, "center", "circle center");
  mo->flags.add_number(mo->app, "radius", "circle radius");

  Command* me = command(verify, "metric", "metric", "exact distance against exhaustive matching");
  me->flags.add_int(me->app, "instances", "random instances");

  Command* mod = command(&app, "modulus", "modulus", "discrete Mod_2 of an annulus family");
  mod->flags.add_string(mod->app, "region", "annulus:inner,outer");
  mod->flags.add_string(mod->app, "family", "radial | circles");
  mod->flags.add_int(mod->app, "grid", "cells per side");
  mod->flags.add_int(mod->app, "n", "exponent (2)");
  mod->flags.add_int(mod->app, "curves", "curves in the family");
  mod->flags.add_number(mod->app, "tol", "tolerance against the ring formula");

  CLI::App* sample = app.add_subcommand("sample", "Monte Carlo samplers");
  sample->require_subcommand(1);
  Command* ah = command(sample, "ahlfors", "ahlfors", "H^n of balls in Omega_f");
  ah->flags.add_json(ah->app, "map", "map spec");
  ah->flags.add_json(ah->app, "centers", "[[y1, y2], ..]");
  ah->flags.add_list(ah->app, "radii", "radii");
  ah->flags.add_int(ah->app, "N", "samples per ball");
  ah->flags.add_number(ah->app, "precision", "flag CIs wider than this fraction of the estimate");

  CLI::App* runc = app.add_subcommand("run", "run a single config file");
  Common run_common;
  run_common.attach(runc);
  runc->get_option("--config")->required();

  CLI::App* suite = app.add_subcommand("suite", "run a manifest of configs");
  std::string manifest, suite_out;
  int jobs = 1;
  suite->add_option("--manifest", manifest, "manifest JSON: [config, ..] or {\"entries\": [..]}")->required();
  suite->add_option("--jobs", jobs, "concurrent entries")->check(CLI::PositiveNumber);
  suite->add_option("--out", suite_out, "directory for reports and summary.md");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }

  try {
    if (suite->parsed()) return run_suite(manifest, jobs, suite_out);
    if (runc->parsed()) {
      json cfg = read_json_file(run_common.config_path);
      if (run_common.seed_opt->count() && !cfg.contains("seed")) cfg["seed"] = run_common.seed;
      return emit(cfg, run_common);
    }
    for (const auto& c : commands) {
      if (!c->app->parsed()) continue;
      json cfg = c->flags.to_config();
      cfg["check"] = c->check;
      if (c->common.seed_opt->count()) cfg["seed"] = c->common.seed;
      if (!c->common.config_path.empty()) cfg.merge_patch(read_json_file(c->common.config_path));
      return emit(cfg, c->common);
    }
    std::cerr << app.help();
    return kUsage;
  } catch (const almqr::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const almqr::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const almqr::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
}
