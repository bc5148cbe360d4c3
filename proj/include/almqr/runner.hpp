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

#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "almqr/geometry.hpp"
#include "almqr/io.hpp"
#include "almqr/lifting.hpp"
#include "almqr/measure.hpp"
#include "almqr/modulus.hpp"
#include "almqr/multivalued.hpp"
#include "almqr/mv_checks.hpp"

#ifndef ALMQR_VERSION
#define ALMQR_VERSION "0.0.0"
#endif

namespace almqr::run {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

struct ClaimInfo {
  const char* id;
  const char* statement;
};

/// Claim-id registry: every check names the statement it exercises.
inline const std::map<std::string, ClaimInfo>& claims() {
  static const std::map<std::string, ClaimInfo> table{
      {"metric", {"almgren-metric", "exact Almgren distance agrees with exhaustive matching"}},
      {"distance", {"almgren-metric", "Almgren distance between two unordered d-tuples"}},
      {"inverse", {"def-minv", "minv f(y) as the fiber counted with local index"}},
      {"comass", {"lemma-comass-natural-form", "the natural n-form on (R^n)^d has comass one"}},
      {"qr-curve", {"thm-qr-curve", "|D minv f|^n <= d^{n/2-1} K_I star(minv f* omega_n)"}},
      {"stokes", {"thm-lip-pullback-flat-form", "d(minv f* w) = minv f*(dw) weakly for invariant w"}},
      {"generalized-inverse", {"cor-qr-curve-vieta", "sum of the fiber points of a polynomial is constant"}},
      {"upper-gradient", {"thm-wug", "H|g'| <= |(minv f o g)'| <= (K_I K_O)^{1/n} H|g'|"}},
      {"area", {"lemma-co-area", "int f_* g = int g J f, and int H^n <= d^{n/2-1} K_I K_O |f^{-1}E|"}},
      {"modulus", {"ring-modulus", "discrete Mod_2 of an annulus family against the ring formula"}},
      {"geom-qc", {"thm-geom-qc", "Mod(Gamma)/(K_I K_O) <= Mod(minv f(Gamma)) <= K_I K_O Mod(Gamma)"}},
      {"ahlfors", {"prop-ball-upper", "H^n of balls in Omega_f is at most omega_n d^{n/2} K_I K_O r^n"}},
      {"preimage-measure", {"prop-hausd-meas-est", "|(minv f o f)^{-1}E| <= d H^n(E)"}},
      {"metric-qc", {"prop-metric-qc", "H_{minv f}(y,r)^2 <= sum of H*_f(x,r)^2 over the fiber"}},
      {"monodromy", {"prop-lifts", "lifts of loops exist and may permute the fiber"}},
  };
  return table;
}

/// Outcome of one check: the report body, pass flag, thresholds and
/// optional CSV plot data.
struct Outcome {
  std::string check;
  bool pass = false;
  json result = json::object();
  json thresholds = json::object();
  std::string csv;
};

namespace detail {

using io::json;

inline const json& need(const json& c, const char* key) {
  auto it = c.find(key);
  if (it == c.end()) throw InvalidArgument("config: missing field '" + std::string(key) + "'");
  return *it;
}

template <class T>
T opt(const json& c, const char* key, T def) {
  auto it = c.find(key);
  if (it == c.end()) return def;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InvalidArgument("config: field '" + std::string(key) + "' has the wrong type");
  }
}

inline std::vector<double> number_list(const json& c, const char* key, std::vector<double> def) {
  auto it = c.find(key);
  if (it == c.end()) return def;
  if (!it->is_array()) throw InvalidArgument("config: field '" + std::string(key) + "' must be an array");
  std::vector<double> v;
  for (const json& x : *it) {
    if (!x.is_number()) throw InvalidArgument("config: field '" + std::string(key) + "' must hold numbers");
    v.push_back(x.get<double>());
  }
  return v;
}

inline CoverPtr map_of(const json& c) { return io::cover_from_json(need(c, "map"), "map"); }

inline Region region_of(const json& c, const BranchedCover& f) {
  if (c.contains("region")) {
    if (!c["region"].is_string()) throw InvalidArgument("config: field 'region' must be a string like annulus:0.5,2");
    const Region r = io::region_from_string(c["region"].get<std::string>());
    if (r.dim() != f.n()) throw InvalidArgument("config: region dimension differs from the map's");
    return r;
  }
  if (f.n() == 2) return Region::annulus(vec2(0, 0), 0.5, 2.0);
  return Region::box(Vector::Constant(f.n(), -2.0), Vector::Constant(f.n(), 2.0));
}

inline std::string csv_header_row(const CheckReport& r) {
  std::ostringstream os;
  os << "check,pass,n_samples,max_ratio,excluded\n"
     << r.check << ',' << (r.pass ? 1 : 0) << ',' << r.n_samples << ',' << r.max_ratio << ',' << r.excluded << '\n';
  return os.str();
}

inline std::string histogram_csv(const json& h) {
  std::ostringstream os;
  os << "bin_lo,bin_hi,count\n";
  const double lo = h["lo"].get<double>(), hi = h["hi"].get<double>();
  const auto counts = h["counts"].get<std::vector<long>>();
  const double w = (hi - lo) / counts.size();
  for (std::size_t i = 0; i < counts.size(); ++i) os << lo + i * w << ',' << lo + (i + 1) * w << ',' << counts[i] << '\n';
  return os.str();
}

inline Outcome from_report(const CheckReport& r, json thresholds) {
  Outcome o;
  o.check = r.check;
  o.pass = r.pass;
  o.result = r.to_json();
  o.thresholds = std::move(thresholds);
  o.csv = r.details.contains("histogram") ? histogram_csv(r.details["histogram"]) : csv_header_row(r);
  return o;
}

inline Outcome check_inverse(const json& c) {
  const CoverPtr f = map_of(c);
  const Vector y = io::vector_from_json(need(c, "y"), "y");
  if (y.size() != f->n()) throw InvalidArgument("config: field 'y' has the wrong dimension");
  const AlmgrenPoint p = f->preimages(y);
  Outcome o;
  o.check = "inverse";
  o.pass = true;
  json H = nullptr;
  try {
    H = h_function(*f, y);
  } catch (const SingularFiberError&) {
  }
  o.result = {{"map", f->describe()},
              {"y", io::to_json(y)},
              {"minv", io::to_json(p)},
              {"generalized_inverse", io::to_json(generalized_inverse(*f, y))},
              {"H", H},
              {"distance_to_branch_values", f->distance_to_branch_values(y)}};
  std::ostringstream os;
  os << "index";
  for (int i = 0; i < f->n(); ++i) os << ",x" << i;
  os << '\n';
  for (const auto& e : p.entries()) {
    os << e.w;
    for (int i = 0; i < f->n(); ++i) os << ',' << e.x[i];
    os << '\n';
  }
  o.csv = os.str();
  return o;
}

inline Outcome check_distance(const json& c) {
  const AlmgrenPoint p = io::point_from_json(need(c, "p"), "p");
  const AlmgrenPoint q = io::point_from_json(need(c, "q"), "q");
  const DistanceResult r = distance(p, q);
  Outcome o;
  o.check = "distance";
  o.pass = true;
  o.result = {{"distance", r.value}, {"matching", r.matching}};
  o.csv = "distance\n" + std::to_string(r.value) + "\n";
  return o;
}

inline Outcome check_metric(const json& c) {
  const long instances = opt<long>(c, "instances", 10000);
  const std::uint64_t seed = opt<std::uint64_t>(c, "seed", 0);
  const int dmin = opt<int>(c, "d_min", 2), dmax = opt<int>(c, "d_max", 6);
  const int nmin = opt<int>(c, "n_min", 1), nmax = opt<int>(c, "n_max", 4);
  if (dmin < 1 || dmax > 8 || dmin > dmax || nmin < 1 || nmin > nmax)
    throw InvalidArgument("config: need 1 <= d_min <= d_max <= 8 and 1 <= n_min <= n_max");
  long mismatches = 0;
  double worst = 0.0;
  for (long i = 0; i < instances; ++i) {
    RandomStream rng(seed, static_cast<std::uint64_t>(i));
    const int d = rng.integer(dmin, dmax), n = rng.integer(nmin, nmax);
    auto draw = [&] {
      std::vector<Vector> xs;
      for (int j = 0; j < d; ++j) {
        if (j > 0 && rng.uniform() < 0.2) {
          xs.push_back(xs[rng.integer(0, j - 1)]);
          continue;
        }
        Vector v(n);
        for (int k = 0; k < n; ++k) v[k] = rng.normal();
        xs.push_back(v);
      }
      return AlmgrenPoint::from_tuple(xs);
    };
    const AlmgrenPoint p = draw(), q = draw();
    const double a = distance(p, q).value, b = distance_bruteforce(p, q).value;
    if (a != b) ++mismatches;
    worst = std::max(worst, std::abs(a - b));
  }
  Outcome o;
  o.check = "metric";
  o.pass = mismatches == 0;
  o.thresholds = {{"mismatches", 0}};
  o.result = {{"instances", instances}, {"mismatches", mismatches}, {"max_abs_difference", worst}};
  o.csv = "instances,mismatches,max_abs_difference\n" + std::to_string(instances) + "," + std::to_string(mismatches) +
          "," + std::to_string(worst) + "\n";
  return o;
}

inline Outcome check_comass(const json& c) {
  const json& fj = need(c, "form");
  const KForm w = io::form_from_json(fj, "form");
  const Vector x = c.contains("point") ? io::vector_from_json(c["point"], "point") : Vector::Zero(w.dim());
  if (x.size() != w.dim()) throw InvalidArgument("config: field 'point' must have n*d entries");
  ComassOptions co;
  co.seed = opt<std::uint64_t>(c, "seed", 0);
  const ComassResult r = comass(w, x, co);
  const double tol = opt<double>(c, "tol", 1e-6);
  std::optional<double> expect;
  if (c.contains("expect")) expect = opt<double>(c, "expect", 1.0);
  else if (fj.is_object() && fj.value("kind", "") == "trace_vol") expect = 1.0;
  Outcome o;
  o.check = "comass";
  o.pass = r.status != ComassStatus::IterationCap && (!expect || std::abs(r.value - *expect) <= tol);
  o.thresholds = {{"expect", expect ? json(*expect) : json(nullptr)}, {"tol", tol}};
  o.result = {{"value", r.value}, {"status", to_string(r.status)}, {"degree", w.degree()}, {"n", w.n()}, {"d", w.d()}};
  o.csv = "value,status\n" + std::to_string(r.value) + "," + to_string(r.status) + "\n";
  return o;
}

inline Outcome check_qr_curve(const json& c) {
  const CoverPtr f = map_of(c);
  QrCurveOptions q;
  q.samples = opt<long>(c, "samples", 10000);
  q.seed = opt<std::uint64_t>(c, "seed", 0);
  q.tol = opt<double>(c, "tol", 1e-6);
  q.exclusion_factor = opt<double>(c, "exclusion_factor", 1e-3);
  const CheckReport r = qr_curve_check(f, region_of(c, *f), q);
  return from_report(r, {{"max_ratio", 1.0 + q.tol}});
}

inline Outcome check_stokes(const json& c) {
  const CoverPtr f = map_of(c);
  const MultiValuedMap g = MultiValuedMap::inverse_of(f, region_of(c, *f));
  const KForm w = io::form_from_json(need(c, "form"), "form");
  const TestForm t = io::test_form_from_json(need(c, "testform"), "testform");
  StokesOptions so;
  if (c.contains("grid")) {
    const int G = opt<int>(c, "grid", 64);
    if (G < 4) throw InvalidArgument("config: field 'grid' must be at least 4");
    so.orders = {G / 4, G / 2, G};
  }
  if (c.contains("orders")) so.orders = opt<std::vector<int>>(c, "orders", so.orders);
  so.tol = opt<double>(c, "tol", 1e-3);
  const CheckReport r = weak_stokes_check(g, w, t, so);
  Outcome o = from_report(r, {{"rel_discrepancy", so.tol}, {"decreasing", true}});
  std::ostringstream os;
  os << "order,lhs,rhs,rel_discrepancy\n";
  for (const auto& l : r.details["levels"])
    os << l["order"].get<int>() << ',' << l["lhs"].get<double>() << ',' << l["rhs"].get<double>() << ','
       << l["rel_discrepancy"].get<double>() << '\n';
  o.csv = os.str();
  return o;
}

inline Outcome check_generalized_inverse(const json& c) {
  const CoverPtr f = map_of(c);
  if (f->n() != 2) throw InvalidArgument("generalized-inverse: planar polynomial maps only");
  Complex expected;
  if (auto p = std::dynamic_pointer_cast<const PlanarPower>(f)) {
    if (p->k() < 2) throw InvalidArgument("generalized-inverse: need degree >= 2");
    expected = 0.0;
  } else if (auto q = std::dynamic_pointer_cast<const ComplexPolynomial>(f)) {
    const auto& cf = q->coefficients();
    expected = -cf[cf.size() - 2] / cf.back();
  } else {
    throw InvalidArgument("generalized-inverse: map must be 'power' or 'poly'");
  }
  const long samples = opt<long>(c, "samples", 10000);
  const std::uint64_t seed = opt<std::uint64_t>(c, "seed", 0);
  const double tol = opt<double>(c, "tol", 1e-8);
  const Region region = region_of(c, *f);
  Summary dev;
  for (long s = 0; s < samples; ++s) {
    RandomStream rng(seed, static_cast<std::uint64_t>(s));
    const Vector g = generalized_inverse(*f, region.sample(rng));
    dev.add(std::abs(Complex(g[0], g[1]) - expected));
  }
  Outcome o;
  o.check = "generalized-inverse";
  o.pass = samples > 0 && dev.max < tol;
  o.thresholds = {{"max_deviation", tol}};
  o.result = {{"map", f->describe()},
              {"samples", samples},
              {"expected", {expected.real(), expected.imag()}},
              {"max_deviation", dev.count ? dev.max : 0.0},
              {"mean_deviation", dev.mean()}};
  o.csv = "samples,max_deviation\n" + std::to_string(samples) + "," + std::to_string(dev.max) + "\n";
  return o;
}

inline Outcome check_monodromy(const json& c) {
  const CoverPtr f = map_of(c);
  if (f->n() != 2) throw InvalidArgument("monodromy: planar maps only");
  const Vector center = c.contains("center") ? io::vector_from_json(c["center"], "center") : vec2(0, 0);
  const double r = opt<double>(c, "radius", 1.0);
  const bool expect_swap = opt<bool>(c, "expect_swap", true);
  LiftOptions lo;
  lo.samples = opt<int>(c, "samples", 257);
  const LiftedPath lp = lift_path(
      *f, [&](double t) { return Vector(center + r * vec2(std::cos(2 * std::numbers::pi * t), std::sin(2 * std::numbers::pi * t))); },
      lo);
  std::vector<Vector> end;
  for (const auto& l : lp.lifts) end.push_back(l.back());
  const AlmgrenPoint start = f->preimages(center + vec2(r, 0));
  const double closure = distance(AlmgrenPoint::from_tuple(end), start).value;
  const bool closed = closure < 1e-9;
  Outcome o;
  o.check = "monodromy";
  o.pass = closed && lp.closed_with_swap() == expect_swap;
  o.thresholds = {{"closure", 1e-9}, {"expect_swap", expect_swap}};
  o.result = {{"map", f->describe()},   {"closure_distance", closure}, {"closed", closed},
              {"swap", lp.closed_with_swap()}, {"monodromy", lp.monodromy},   {"steps", lp.steps},
              {"max_jump", lp.max_jump}};
  o.csv = "closed,swap\n" + std::to_string(closed) + "," + std::to_string(lp.closed_with_swap()) + "\n";
  return o;
}

inline Grid2 grid_around(const CurveFamily& fam, int N) {
  Vector lo = fam.curves.at(0).pts.at(0), hi = lo;
  for (const Curve& cv : fam.curves)
    for (const Vector& p : cv.pts) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  const double pad = 1e-3 * (hi - lo).maxCoeff() + 1e-12;
  return Grid2(Vector(lo.array() - pad), Vector(hi.array() + pad), N);
}

inline CurveFamily family_of(const json& c) { return io::family_from_json(need(c, "family"), "family"); }

inline Outcome check_geom_qc(const json& c) {
  const CoverPtr f = map_of(c);
  const CurveFamily fam = family_of(c);
  PushforwardModulusOptions po;
  po.slack = opt<double>(c, "slack", 0.05);
  po.solver.tol = opt<double>(c, "solver_tol", 1e-4);
  const CheckReport r = pushforward_modulus_check(*f, fam, grid_around(fam, opt<int>(c, "grid", 128)), po);
  const double K = f->K_I() * f->K_O();
  Outcome o = from_report(r, {{"ratio_min", 1.0 / K - po.slack}, {"ratio_max", K + po.slack}});
  o.csv = "mod_base,mod_image,ratio\n" + std::to_string(r.details["mod_base"].get<double>()) + "," +
          std::to_string(r.details["mod_image"].get<double>()) + "," + std::to_string(r.details["ratio"].get<double>()) +
          "\n";
  return o;
}

inline Outcome check_upper_gradient(const json& c) {
  const CoverPtr f = map_of(c);
  UpperGradientOptions uo;
  uo.samples_per_curve = opt<int>(c, "samples_per_curve", 64);
  uo.tol = opt<double>(c, "tol", 1e-6);
  uo.branch_margin = opt<double>(c, "branch_margin", 0.05);
  const CheckReport r = upper_gradient_check(*f, family_of(c), uo);
  return from_report(r, {{"violation_fraction", 0.0}, {"tol", uo.tol}});
}

inline Outcome check_area(const json& c) {
  const CoverPtr f = map_of(c);
  AreaFormulaOptions ao;
  ao.tol = opt<double>(c, "tol", 1e-3);
  const ScalarField g = scalar_field_from_string(opt<std::string>(c, "field", "one"));
  const CheckReport r = area_formula_check(*f, g, opt<double>(c, "inner", 0.5), opt<double>(c, "outer", 2.0), ao);
  Outcome o = from_report(r, {{"rel_discrepancy", ao.tol}, {"energy_bound", "inequality"}});
  std::ostringstream os;
  os << "radial,angular,lhs,rhs,rel_discrepancy\n";
  for (const auto& l : r.details["levels"])
    os << l["radial"].get<int>() << ',' << l["angular"].get<int>() << ',' << l["lhs"].get<double>() << ','
       << l["rhs"].get<double>() << ',' << l["rel_discrepancy"].get<double>() << '\n';
  o.csv = os.str();
  return o;
}

inline AlmgrenPoint ball_center(const json& c, const BranchedCover& f) {
  if (c.contains("z")) return io::point_from_json(c["z"], "z");
  const Vector y = io::vector_from_json(need(c, "y"), "y");
  if (y.size() != f.n()) throw InvalidArgument("config: field 'y' has the wrong dimension");
  return f.preimages(y);
}

inline Outcome check_preimage_measure(const json& c) {
  const CoverPtr f = map_of(c);
  const CheckReport r = preimage_measure_check(*f, ball_center(c, *f), opt<double>(c, "r", 0.1),
                                               opt<long>(c, "N", 100000), opt<std::uint64_t>(c, "seed", 0));
  Outcome o = from_report(r, {{"ratio_max", "d (1 + 3 sigma)"}});
  o.csv = "preimage_measure,hn_measure,ratio,ratio_sigma\n" +
          std::to_string(r.details["preimage_measure"].get<double>()) + "," +
          std::to_string(r.details["hn_measure"].get<double>()) + "," + std::to_string(r.details["ratio"].get<double>()) +
          "," + std::to_string(r.details["ratio_sigma"].get<double>()) + "\n";
  return o;
}

inline Outcome check_metric_qc(const json& c) {
  const CoverPtr f = map_of(c);
  const Vector y = io::vector_from_json(need(c, "y"), "y");
  MetricQcOptions mo;
  mo.directions = opt<int>(c, "directions", 64);
  mo.ray_samples = opt<int>(c, "ray_samples", 33);
  mo.tol = opt<double>(c, "tol", 1e-6);
  mo.seed = opt<std::uint64_t>(c, "seed", 0);
  const CheckReport r = metric_qc_check(*f, y, number_list(c, "radii", {0.1}), mo);
  Outcome o = from_report(r, {{"ratio_max", 1.0 + mo.tol}});
  std::ostringstream os;
  os << "r,H_minv,sum_H_star_sq,ratio\n";
  for (const auto& l : r.details["radii"])
    os << l["r"].get<double>() << ',' << l["H_minv"].get<double>() << ',' << l["sum_H_star_sq"].get<double>() << ','
       << l["ratio"].get<double>() << '\n';
  o.csv = os.str();
  return o;
}

inline Outcome check_modulus(const json& c) {
  if (opt<int>(c, "n", 2) != 2) throw InvalidArgument("modulus: only n = 2 is supported");
  CurveFamily fam;
  std::optional<double> oracle;
  if (c.contains("family") && c["family"].is_object()) {
    fam = family_of(c);
  } else {
    const Region reg = io::region_from_string(opt<std::string>(c, "region", "annulus:1,2.718281828459045"));
    if (reg.kind() != Region::Kind::Annulus || reg.dim() != 2)
      throw InvalidArgument("modulus: region must be a planar annulus");
    const std::string kind = opt<std::string>(c, "family", "radial");
    const int M = opt<int>(c, "curves", 2048);
    const double ratio = std::log(reg.outer() / reg.inner());
    if (!(reg.inner() > 0)) throw InvalidArgument("modulus: annulus needs a positive inner radius");
    if (kind == "radial") {
      fam = CurveFamily::radial(reg.center(), reg.inner(), reg.outer(), M, opt<int>(c, "samples", 64));
      oracle = 2 * std::numbers::pi / ratio;
    } else if (kind == "circles") {
      fam = CurveFamily::circles(reg.center(), reg.inner(), reg.outer(), M, opt<int>(c, "samples", 512));
      oracle = ratio / (2 * std::numbers::pi);
    } else {
      throw InvalidArgument("modulus: field 'family' must be radial or circles (or a family object)");
    }
  }
  std::vector<int> grids = opt<std::vector<int>>(c, "grids", {});
  if (grids.empty()) grids.push_back(opt<int>(c, "grid", 256));
  const double tol = opt<double>(c, "tol", 0.05);
  ModulusOptions mo;
  mo.tol = opt<double>(c, "solver_tol", 1e-4);
  json levels = json::array();
  std::ostringstream os;
  os << "grid,value,lower_bound,relative_gap,oracle\n";
  ModulusResult last;
  double prev = 0.0, stab = 0.0;
  for (int N : grids) {
    last = discrete_modulus(fam, grid_around(fam, N), 2, euclidean_weight(), mo);
    json lv = last.to_json();
    lv["grid"] = N;
    levels.push_back(lv);
    os << N << ',' << last.value << ',' << last.lower_bound << ',' << last.relative_gap() << ','
       << (oracle ? *oracle : std::nan("")) << '\n';
    if (prev > 0) stab = std::abs(last.value / prev - 1.0);
    prev = last.value;
  }
  Outcome o;
  o.check = "modulus";
  const double rel_err = oracle ? std::abs(last.value / *oracle - 1.0) : 0.0;
  o.pass = last.converged && rel_err <= tol && stab <= tol;
  o.thresholds = {{"rel_error", tol}, {"stabilization", tol}};
  o.result = {{"family", fam.kind},
              {"curves", fam.size()},
              {"value", last.value},
              {"oracle", oracle ? json(*oracle) : json(nullptr)},
              {"rel_error", oracle ? json(rel_err) : json(nullptr)},
              {"stabilization", stab},
              {"levels", levels}};
  o.csv = os.str();
  return o;
}

inline Outcome check_ahlfors(const json& c) {
  const CoverPtr f = map_of(c);
  const json& cj = need(c, "centers");
  if (!cj.is_array() || cj.empty()) throw InvalidArgument("config: field 'centers' must be a nonempty array");
  std::vector<Vector> centers;
  for (const json& v : cj) {
    centers.push_back(io::vector_from_json(v, "centers"));
    if (centers.back().size() != f->n()) throw InvalidArgument("config: centers have the wrong dimension");
  }
  const std::vector<double> radii = number_list(c, "radii", {0.05, 0.1});
  const double precision = opt<double>(c, "precision", 0.0);
  const auto samples = ahlfors_sampler(*f, centers, radii, opt<long>(c, "N", 100000), opt<std::uint64_t>(c, "seed", 0));
  Outcome o;
  o.check = "ahlfors";
  o.pass = true;
  json rows = json::array();
  std::ostringstream os;
  os << "center,r,measure,sigma,ratio,ratio_sigma,within_bound\n";
  double worst = 0.0;
  long imprecise = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const OmegaFSample& s = samples[i];
    o.pass = o.pass && s.within_bound();
    worst = std::max(worst, s.ratio);
    const bool wide = precision > 0 && s.ci_half_width() > precision * s.measure;
    imprecise += wide;
    json row = s.to_json();
    row["within_bound"] = s.within_bound();
    row["ci_wider_than_requested"] = wide;
    rows.push_back(row);
    os << i / radii.size() << ',' << s.radius << ',' << s.measure << ',' << s.sigma << ',' << s.ratio << ','
       << s.ratio_sigma << ',' << s.within_bound() << '\n';
  }
  o.thresholds = {{"ratio_max", "1 + 3 sigma"}, {"precision", precision}};
  o.result = {{"map", f->describe()}, {"max_ratio", worst}, {"imprecise", imprecise}, {"samples", rows}};
  o.csv = os.str();
  return o;
}

}  // namespace detail

inline const std::map<std::string, std::function<Outcome(const json&)>>& registry() {
  static const std::map<std::string, std::function<Outcome(const json&)>> table{
      {"inverse", detail::check_inverse},
      {"distance", detail::check_distance},
      {"metric", detail::check_metric},
      {"comass", detail::check_comass},
      {"qr-curve", detail::check_qr_curve},
      {"stokes", detail::check_stokes},
      {"generalized-inverse", detail::check_generalized_inverse},
      {"monodromy", detail::check_monodromy},
      {"geom-qc", detail::check_geom_qc},
      {"upper-gradient", detail::check_upper_gradient},
      {"area", detail::check_area},
      {"preimage-measure", detail::check_preimage_measure},
      {"metric-qc", detail::check_metric_qc},
      {"modulus", detail::check_modulus},
      {"ahlfors", detail::check_ahlfors},
  };
  return table;
}

/// Dispatches on config["check"].
inline Outcome run(const json& config) {
  if (!config.is_object()) throw InvalidArgument("config: expected a JSON object");
  auto it = config.find("check");
  if (it == config.end() || !it->is_string()) throw InvalidArgument("config: missing string field 'check'");
  const std::string check = it->get<std::string>();
  auto h = registry().find(check);
  if (h == registry().end()) throw InvalidArgument("config: unknown check '" + check + "'");
  Outcome o = h->second(config);
  o.check = check;
  return o;
}

inline std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

/// Schema-versioned report. Everything except "timestamp" is a function of
/// the config alone.
inline json make_record(const json& config, const Outcome& o, double runtime_s) {
  const auto& c = claims().at(o.check);
  return {{"schema_version", kSchemaVersion},
          {"tool_version", ALMQR_VERSION},
          {"claim_id", c.id},
          {"claim", c.statement},
          {"check", o.check},
          {"inputs_digest", io::digest(config.dump())},
          {"config", config},
          {"pass", o.pass},
          {"thresholds", o.thresholds},
          {"result", o.result},
          {"timestamp", {{"utc", utc_now()}, {"runtime_s", runtime_s}}}};
}

/// Writes through a temporary file and a rename, so readers never see a
/// partial report.
inline void write_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    if (!out) throw Error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

struct SuiteRow {
  std::string name, check, claim_id;
  bool pass = false;
  std::string status;  // PASS, FAIL or ERROR
  std::string headline;
  std::string error;
  double runtime_s = 0.0;
};

inline std::string headline_of(const Outcome& o) {
  const json& r = o.result;
  for (const char* key : {"max_ratio", "rel_error", "value", "ratio", "max_deviation", "mismatches", "closure_distance"})
    if (r.contains(key) && r[key].is_number()) {
      std::ostringstream os;
      os << key << "=" << r[key].get<double>();
      return os.str();
    }
  return "";
}

/// Runs the manifest entries on up to `jobs` threads. Reports go to
/// out_dir/<index>-<name>.json when out_dir is nonempty. A throwing entry is
/// an ERROR row; the others still run.
inline std::vector<SuiteRow> run_suite(const json& entries, int jobs, const std::filesystem::path& out_dir) {
  if (!entries.is_array()) throw InvalidArgument("manifest: expected an array of configs or {\"entries\": [..]}");
  std::vector<SuiteRow> rows(entries.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      const json& cfg = entries[i];
      SuiteRow& row = rows[i];
      row.name = cfg.is_object() && cfg.contains("name") && cfg["name"].is_string() ? cfg["name"].get<std::string>()
                                                                                    : "entry" + std::to_string(i);
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const Outcome o = run(cfg);
        row.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        row.check = o.check;
        row.claim_id = claims().at(o.check).id;
        row.pass = o.pass;
        row.status = o.pass ? "PASS" : "FAIL";
        row.headline = headline_of(o);
        if (!out_dir.empty()) {
          char idx[16];
          std::snprintf(idx, sizeof idx, "%03zu", i);
          write_atomic(out_dir / (std::string(idx) + "-" + row.name + ".json"),
                       make_record(cfg, o, row.runtime_s).dump(2) + "\n");
        }
      } catch (const std::exception& e) {
        row.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        row.check = cfg.is_object() ? cfg.value("check", "?") : "?";
        auto c = claims().find(row.check);
        row.claim_id = c == claims().end() ? "?" : c->second.id;
        row.status = "ERROR";
        row.error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < std::max(1, jobs); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return rows;
}

inline std::string suite_markdown(const std::vector<SuiteRow>& rows) {
  std::ostringstream os;
  os << "| # | entry | claim | statement | check | status | headline | runtime (s) |\n"
     << "|---|---|---|---|---|---|---|---|\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SuiteRow& r = rows[i];
    auto c = claims().find(r.check);
    os << "| " << i << " | " << r.name << " | " << r.claim_id << " | "
       << (c == claims().end() ? "" : c->second.statement) << " | " << r.check << " | " << r.status << " | "
       << (r.status == "ERROR" ? r.error : r.headline) << " | " << r.runtime_s << " |\n";
  }
  long pass = 0;
  for (const auto& r : rows) pass += r.pass;
  os << "\n" << pass << "/" << rows.size() << " entries pass.\n";
  return os.str();
}

inline json suite_json(const std::vector<SuiteRow>& rows) {
  json a = json::array();
  for (const auto& r : rows)
    a.push_back({{"name", r.name}, {"check", r.check}, {"claim_id", r.claim_id}, {"status", r.status},
                 {"pass", r.pass}, {"headline", r.headline}, {"error", r.error}});
  return {{"schema_version", kSchemaVersion}, {"tool_version", ALMQR_VERSION}, {"rows", a}};
}

}  // namespace almqr::run
