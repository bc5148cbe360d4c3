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

#include <cstdint>
#include <cstdio>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "almqr/almgren.hpp"
#include "almqr/covers.hpp"
#include "almqr/forms.hpp"
#include "almqr/modulus.hpp"
#include "almqr/mv_checks.hpp"
#include "almqr/region.hpp"

namespace almqr::io {

using nlohmann::json;

namespace detail {

[[noreturn]] inline void fail(const std::string& field, const std::string& msg) {
  throw InvalidArgument("field '" + field + "': " + msg);
}

inline const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(where + "." + key, "missing");
  return *it;
}

inline int get_int(const json& j, const char* key, const std::string& where) {
  const json& v = require(j, key, where);
  if (!v.is_number_integer()) fail(where + "." + key, "expected an integer");
  return v.get<int>();
}

inline double get_number(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  return v.get<double>();
}

inline Complex get_complex(const json& v, const std::string& where) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2) return {get_number(v[0], where), get_number(v[1], where)};
  fail(where, "expected a number or [re, im]");
}

}  // namespace detail

inline Vector vector_from_json(const json& j, const std::string& where = "vector") {
  if (!j.is_array() || j.empty()) detail::fail(where, "expected a nonempty array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = detail::get_number(j[i], where);
  return v;
}

inline json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Matrix matrix_from_json(const json& j, const std::string& where = "matrix") {
  if (!j.is_array() || j.empty() || !j[0].is_array()) detail::fail(where, "expected a nonempty array of rows");
  const std::size_t rows = j.size(), cols = j[0].size();
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) detail::fail(where, "rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = detail::get_number(j[r][c], where);
  }
  return m;
}

/// {"n": int, "points": [{"x": [..], "w": int}, ...]}; "w" defaults to 1.
inline AlmgrenPoint point_from_json(const json& j, const std::string& where = "point") {
  const int n = detail::get_int(j, "n", where);
  const json& pts = detail::require(j, "points", where);
  if (!pts.is_array() || pts.empty()) detail::fail(where + ".points", "expected a nonempty array");
  std::vector<AlmgrenPoint::Entry> e;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const std::string w = where + ".points[" + std::to_string(i) + "]";
    Vector x = vector_from_json(detail::require(pts[i], "x", w), w + ".x");
    if (x.size() != n) detail::fail(w + ".x", "length differs from n");
    int weight = 1;
    if (pts[i].contains("w")) weight = detail::get_int(pts[i], "w", w);
    if (weight < 1) detail::fail(w + ".w", "weights must be positive");
    e.push_back({std::move(x), weight});
  }
  return AlmgrenPoint(n, std::move(e));
}

inline json to_json(const AlmgrenPoint& p) {
  json pts = json::array();
  for (const auto& e : p.entries()) pts.push_back({{"x", to_json(e.x)}, {"w", e.w}});
  return {{"n", p.ambient_dim()}, {"points", pts}};
}

/// Map DSL: {"map": "poly", "coeffs": [c0, .., cd]} with real or [re, im]
/// entries; {"map": "power", "k": k}; {"map": "wind3", "k": k};
/// {"map": "precompose", "affine": [[..]], "offset": [..], "base": {..}};
/// {"map": "identity", "n": n}; {"map": "affine", "matrix": [[..]], "offset": [..]}.
inline CoverPtr cover_from_json(const json& j, const std::string& where = "map") {
  const json& kind = detail::require(j, "map", where);
  if (!kind.is_string()) detail::fail(where + ".map", "expected a string");
  const std::string k = kind.get<std::string>();
  if (k == "poly") {
    const json& c = detail::require(j, "coeffs", where);
    if (!c.is_array() || c.size() < 2) detail::fail(where + ".coeffs", "need at least two coefficients");
    std::vector<Complex> coeffs;
    for (std::size_t i = 0; i < c.size(); ++i)
      coeffs.push_back(detail::get_complex(c[i], where + ".coeffs[" + std::to_string(i) + "]"));
    return std::make_shared<ComplexPolynomial>(std::move(coeffs));
  }
  if (k == "power") return std::make_shared<PlanarPower>(detail::get_int(j, "k", where));
  if (k == "wind3") return std::make_shared<WindingMap3D>(detail::get_int(j, "k", where));
  if (k == "identity") return AffineCover::identity(j.contains("n") ? detail::get_int(j, "n", where) : 2);
  if (k == "affine" || k == "precompose") {
    const Matrix a = matrix_from_json(detail::require(j, k == "affine" ? "matrix" : "affine", where), where);
    const Vector b = j.contains("offset") ? vector_from_json(j["offset"], where + ".offset") : Vector::Zero(a.rows());
    if (b.size() != a.rows()) detail::fail(where + ".offset", "length differs from the matrix size");
    if (k == "affine") return std::make_shared<AffineCover>(a, b);
    return std::make_shared<Precomposed>(a, b, cover_from_json(detail::require(j, "base", where), where + ".base"));
  }
  detail::fail(where + ".map", "unknown map kind '" + k + "' (poly, power, wind3, precompose, identity, affine)");
}

/// Regions as compact strings: "annulus:inner,outer[,c1,..,cn]",
/// "ball:radius,c1,..,cn", "box:lo1,..,lon,hi1,..,hin". Annulus centers
/// default to the planar origin.
inline Region region_from_string(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) detail::fail("region", "expected kind:numbers, got '" + s + "'");
  const std::string kind = s.substr(0, colon);
  std::vector<double> v;
  std::stringstream ss(s.substr(colon + 1));
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      detail::fail("region", "bad number '" + tok + "'");
    }
  }
  auto tail = [&](std::size_t from) {
    Vector c(static_cast<Eigen::Index>(v.size() - from));
    for (std::size_t i = from; i < v.size(); ++i) c[static_cast<Eigen::Index>(i - from)] = v[i];
    return c;
  };
  if (kind == "annulus") {
    if (v.size() == 2) return Region::annulus(vec2(0, 0), v[0], v[1]);
    if (v.size() > 3) return Region::annulus(tail(2), v[0], v[1]);
  } else if (kind == "ball") {
    if (v.size() >= 2) return Region::ball(tail(1), v[0]);
  } else if (kind == "box") {
    if (v.size() >= 2 && v.size() % 2 == 0) {
      const std::size_t m = v.size() / 2;
      Vector lo(static_cast<Eigen::Index>(m)), hi(static_cast<Eigen::Index>(m));
      for (std::size_t i = 0; i < m; ++i) {
        lo[static_cast<Eigen::Index>(i)] = v[i];
        hi[static_cast<Eigen::Index>(i)] = v[m + i];
      }
      return Region::box(lo, hi);
    }
  } else {
    detail::fail("region", "unknown kind '" + kind + "' (annulus, ball, box)");
  }
  detail::fail("region", "wrong number of values for " + kind);
}

namespace detail {

inline Polynomial polynomial_from_json(const json& monos, int nvars, const std::string& where) {
  if (!monos.is_array()) fail(where, "expected an array of monomials {c, e}");
  Polynomial p(nvars);
  for (std::size_t i = 0; i < monos.size(); ++i) {
    const std::string w = where + "[" + std::to_string(i) + "]";
    const double c = get_number(require(monos[i], "c", w), w + ".c");
    std::vector<int> e(nvars, 0);
    if (monos[i].contains("e")) {
      const json& ej = monos[i]["e"];
      if (!ej.is_array() || static_cast<int>(ej.size()) != nvars) fail(w + ".e", "exponent vector of wrong length");
      for (int k = 0; k < nvars; ++k) {
        if (!ej[k].is_number_integer() || ej[k].get<int>() < 0) fail(w + ".e", "exponents must be integers >= 0");
        e[k] = ej[k].get<int>();
      }
    }
    p.add_term(e, c);
  }
  return p;
}

}  // namespace detail

/// Form DSL: {"kind": "trace_vol", "n", "d"} is ω_n = tr(vol);
/// {"kind": "trace_1form", "n", "d", "components": [{"dx": i, "monomials":
/// [{"c": .., "e": [..]}]}]} is tr(Σ p_i dx_i) for polynomials on R^n;
/// {"kind": "elementary", "n", "d", "indices": [..], "coeff": c} is the
/// constant c dx_I on (R^n)^d; {"kind": "scalar", "n", "monomials": [..]} is a
/// polynomial 0-form on R^n; {"kind": "sum", "terms": [..], "weights": [..]}.
/// Any form accepts "symmetrize": true to apply P_Γ for Γ = S_d.
inline KForm form_from_json(const json& j, const std::string& where = "form") {
  const json& kind = detail::require(j, "kind", where);
  if (!kind.is_string()) detail::fail(where + ".kind", "expected a string");
  const std::string k = kind.get<std::string>();
  KForm out;
  if (k == "sum") {
    const json& terms = detail::require(j, "terms", where);
    if (!terms.is_array() || terms.empty()) detail::fail(where + ".terms", "expected a nonempty array");
    std::vector<KForm> fs;
    for (std::size_t i = 0; i < terms.size(); ++i)
      fs.push_back(form_from_json(terms[i], where + ".terms[" + std::to_string(i) + "]"));
    std::vector<double> w(fs.size(), 1.0);
    if (j.contains("weights")) {
      const json& wj = j["weights"];
      if (!wj.is_array() || wj.size() != fs.size()) detail::fail(where + ".weights", "one weight per term");
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = detail::get_number(wj[i], where + ".weights");
    }
    for (std::size_t i = 1; i < fs.size(); ++i)
      if (fs[i].degree() != fs[0].degree() || fs[i].n() != fs[0].n() || fs[i].d() != fs[0].d())
        detail::fail(where + ".terms", "terms must share degree, n and d");
    out = linear_combination(w, fs);
  } else {
    const int n = detail::get_int(j, "n", where);
    const int d = j.contains("d") ? detail::get_int(j, "d", where) : 1;
    if (n < 1 || d < 1) detail::fail(where, "n and d must be positive");
    if (k == "trace_vol") {
      out = natural_form(n, d);
    } else if (k == "trace_1form") {
      const json& comps = detail::require(j, "components", where);
      if (!comps.is_array()) detail::fail(where + ".components", "expected an array");
      std::map<IndexMask, Polynomial> terms;
      for (std::size_t c = 0; c < comps.size(); ++c) {
        const std::string w = where + ".components[" + std::to_string(c) + "]";
        const int i = detail::get_int(comps[c], "dx", w);
        if (i < 0 || i >= n) detail::fail(w + ".dx", "index out of range");
        auto it = terms.try_emplace(IndexMask{1} << i, Polynomial(n)).first;
        it->second += detail::polynomial_from_json(detail::require(comps[c], "monomials", w), n, w + ".monomials");
      }
      out = trace_form(polynomial_form(1, n, 1, terms), d);
    } else if (k == "scalar") {
      if (d != 1) detail::fail(where + ".d", "scalar forms live on R^n (d = 1)");
      std::map<IndexMask, Polynomial> terms;
      terms.emplace(IndexMask{0}, detail::polynomial_from_json(detail::require(j, "monomials", where), n, where + ".monomials"));
      out = polynomial_form(0, n, 1, terms);
    } else if (k == "elementary") {
      const json& idx = detail::require(j, "indices", where);
      if (!idx.is_array()) detail::fail(where + ".indices", "expected an array");
      std::vector<int> ind;
      for (const json& v : idx) {
        if (!v.is_number_integer() || v.get<int>() < 0 || v.get<int>() >= n * d)
          detail::fail(where + ".indices", "indices must be integers in [0, n*d)");
        ind.push_back(v.get<int>());
      }
      const double c = j.contains("coeff") ? detail::get_number(j["coeff"], where + ".coeff") : 1.0;
      out = KForm::constant_form(n, d, Covector::elementary(n * d, ind, c), d == 1 ? Invariance::full() : Invariance::none());
    } else {
      detail::fail(where + ".kind", "unknown form kind '" + k + "' (trace_vol, trace_1form, scalar, elementary, sum)");
    }
  }
  if (j.contains("symmetrize") && j["symmetrize"].is_boolean() && j["symmetrize"].get<bool>())
    out = symmetrize(out, GroupAction::symmetric(out.d()));
  return out;
}

/// {"center": [..], "radius": r, "beta": form on R^m}.
inline TestForm test_form_from_json(const json& j, const std::string& where = "testform") {
  const Vector c = vector_from_json(detail::require(j, "center", where), where + ".center");
  const double r = detail::get_number(detail::require(j, "radius", where), where + ".radius");
  return bump_test_form(c, r, form_from_json(detail::require(j, "beta", where), where + ".beta"));
}

/// {"family": "radial" | "circles", "inner", "outer", "center", "M",
/// "samples"} or {"family": "polylines", "lines": [[[x, y], ..], ..]}.
inline CurveFamily family_from_json(const json& j, const std::string& where = "family") {
  const json& kind = detail::require(j, "family", where);
  if (!kind.is_string()) detail::fail(where + ".family", "expected a string");
  const std::string k = kind.get<std::string>();
  if (k == "polylines") {
    const json& lines = detail::require(j, "lines", where);
    if (!lines.is_array() || lines.empty()) detail::fail(where + ".lines", "expected a nonempty array");
    std::vector<std::vector<Vector>> ls;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const std::string w = where + ".lines[" + std::to_string(i) + "]";
      if (!lines[i].is_array()) detail::fail(w, "expected an array of points");
      std::vector<Vector> pts;
      for (const json& p : lines[i]) pts.push_back(vector_from_json(p, w));
      ls.push_back(std::move(pts));
    }
    return CurveFamily::polylines(std::move(ls));
  }
  if (k != "radial" && k != "circles")
    detail::fail(where + ".family", "unknown family '" + k + "' (radial, circles, polylines)");
  const double inner = detail::get_number(detail::require(j, "inner", where), where + ".inner");
  const double outer = detail::get_number(detail::require(j, "outer", where), where + ".outer");
  const Vector c = j.contains("center") ? vector_from_json(j["center"], where + ".center") : vec2(0, 0);
  if (c.size() != 2) detail::fail(where + ".center", "families are planar");
  const int M = j.contains("M") ? detail::get_int(j, "M", where) : 256;
  if (k == "radial") return CurveFamily::radial(c, inner, outer, M, j.contains("samples") ? detail::get_int(j, "samples", where) : 64);
  return CurveFamily::circles(c, inner, outer, M, j.contains("samples") ? detail::get_int(j, "samples", where) : 256);
}

/// 64-bit FNV-1a of a string, as 16 hex digits.
inline std::string digest(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace almqr::io
