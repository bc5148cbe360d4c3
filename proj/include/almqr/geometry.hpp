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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "almqr/almgren.hpp"
#include "almqr/assignment.hpp"
#include "almqr/covers.hpp"
#include "almqr/lifting.hpp"
#include "almqr/modulus.hpp"
#include "almqr/quadrature.hpp"
#include "almqr/report.hpp"
#include "almqr/rng.hpp"

namespace almqr {

struct UpperGradientOptions {
  int samples_per_curve = 64;
  double fd_step = 1e-5;          // displacement in y for the central difference
  double tol = 1e-6;
  double branch_margin = 0.05;    // samples closer than this to f(B_f) are excluded
};

namespace detail {

// Fiber over y, reordered to follow `ref` by optimal assignment.
inline std::vector<Vector> matched_fiber(const BranchedCover& f, const Vector& y, const std::vector<Vector>& ref) {
  const std::vector<Vector> fib = expand(f.preimages(y));
  const Assignment a = solve_assignment_lexmin(squared_distance_matrix(ref, fib));
  std::vector<Vector> out(ref.size());
  for (std::size_t j = 0; j < ref.size(); ++j) out[j] = fib[a.perm[j]];
  return out;
}

inline double operator_norm(const Matrix& a) { return Eigen::JacobiSVD<Matrix>(a).singularValues()[0]; }

}  // namespace detail

/// Speed of minv f ∘ γ against H(γ) |γ'|. The speed is the central difference
/// of the fibers at γ(t) ± h γ'/|γ'|, each matched to the fiber at γ(t), in
/// the A_d metric. A sample violates when speed / (H |γ'|) leaves
/// [1 - tol, (K_I K_O)^{1/n} (1 + tol)].
inline CheckReport upper_gradient_check(const BranchedCover& f, const CurveFamily& fam,
                                        const UpperGradientOptions& opt = {}) {
  if (fam.curves.empty()) throw InvalidArgument("upper_gradient_check: empty family");
  if (opt.samples_per_curve < 1 || !(opt.fd_step > 0)) throw InvalidArgument("upper_gradient_check: bad options");
  const int n = f.n();
  const double upper = std::pow(f.K_I() * f.K_O(), 1.0 / n);
  Summary ratio;
  Histogram hist(0.9, std::max(1.1, upper * 1.1), 40);
  long violations = 0, excluded = 0;
  for (const Curve& c : fam.curves) {
    if (c.pts.front().size() != n) throw InvalidArgument("upper_gradient_check: curve dimension mismatch");
    for (int s = 0; s < opt.samples_per_curve; ++s) {
      const double t = (s + 0.5) / opt.samples_per_curve;
      const Vector y = c.at(t);
      const Vector v = c.velocity(t);
      const double vn = v.norm();
      if (!(vn > 0) || f.distance_to_branch_values(y) < opt.branch_margin) {
        ++excluded;
        continue;
      }
      const Vector step = (opt.fd_step / vn) * v;
      double speed2 = 0.0, H = 0.0;
      try {
        const std::vector<Vector> x0 = expand(f.preimages(y));
        const std::vector<Vector> xp = detail::matched_fiber(f, y + step, x0);
        const std::vector<Vector> xm = detail::matched_fiber(f, y - step, x0);
        for (std::size_t j = 0; j < x0.size(); ++j) speed2 += (xp[j] - xm[j]).squaredNorm();
        H = h_function(f, y);
      } catch (const SingularFiberError&) {
        ++excluded;
        continue;
      }
      const double rho = std::sqrt(speed2) / (2.0 * opt.fd_step) / H;
      ratio.add(rho);
      hist.add(rho);
      if (rho < 1.0 - opt.tol || rho > upper * (1.0 + opt.tol)) ++violations;
    }
  }
  CheckReport r;
  r.check = "upper-gradient";
  r.n_samples = ratio.count;
  r.excluded = excluded;
  r.max_ratio = ratio.count ? ratio.max : 0.0;
  const double fraction = ratio.count ? static_cast<double>(violations) / ratio.count : 0.0;
  r.pass = ratio.count > 0 && violations == 0;
  r.details = {{"map", f.describe()},
               {"family", fam.kind},
               {"upper_constant", upper},
               {"min_ratio", ratio.count ? ratio.min : 0.0},
               {"max_relative_gap", ratio.count ? std::max(ratio.max - 1.0, 1.0 - ratio.min) : 0.0},
               {"violations", violations},
               {"violation_fraction", fraction},
               {"tol", opt.tol},
               {"fd_step", opt.fd_step},
               {"branch_margin", opt.branch_margin},
               {"histogram", hist.to_json()}};
  return r;
}

enum class ScalarField { One, NormSquared, InverseNormPowN };

inline std::string to_string(ScalarField g) {
  switch (g) {
    case ScalarField::One: return "one";
    case ScalarField::NormSquared: return "norm2";
    case ScalarField::InverseNormPowN: return "inv-norm-pow-n";
  }
  return "?";
}

inline ScalarField scalar_field_from_string(const std::string& s) {
  if (s == "one") return ScalarField::One;
  if (s == "norm2") return ScalarField::NormSquared;
  if (s == "inv-norm-pow-n") return ScalarField::InverseNormPowN;
  throw InvalidArgument("unknown scalar field '" + s + "' (one, norm2, inv-norm-pow-n)");
}

struct AreaFormulaOptions {
  /// (radial order, angular points) per level; the last level is reported.
  std::vector<std::pair<int, int>> levels{{16, 64}, {32, 128}, {64, 256}};
  double tol = 1e-3;
};

/// ∫_E f_* g dy against ∫_{f^{-1}E} g |J f| dx for the annulus
/// E = {inner < |y| < outer}, with f^{-1}E parametrized by the cover's
/// annulus chart. Also reports ∫_E H^n against d^{n/2-1} K_I K_O |f^{-1}E|.
inline CheckReport area_formula_check(const BranchedCover& f, ScalarField field, double inner, double outer,
                                      const AreaFormulaOptions& opt = {}) {
  if (f.n() != 2) throw InvalidArgument("area_formula_check: planar maps only");
  if (!(outer > inner && inner >= 0)) throw InvalidArgument("area_formula_check: need 0 <= inner < outer");
  if (opt.levels.empty()) throw InvalidArgument("area_formula_check: no quadrature levels");
  const std::optional<AnnulusChart> chart = f.annulus_preimage(inner, outer);
  if (!chart) throw InvalidArgument("area_formula_check: map " + f.describe() + " has no annulus chart");
  const int n = 2, d = f.degree();
  auto g = [&](const Vector& x) {
    switch (field) {
      case ScalarField::One: return 1.0;
      case ScalarField::NormSquared: return x.squaredNorm();
      case ScalarField::InverseNormPowN: return std::pow(detail::operator_norm(f.differential(x)), -n);
    }
    return 0.0;
  };
  const double detM = std::abs(chart->M.determinant());

  nlohmann::json levels = nlohmann::json::array();
  double lhs = 0, rhs = 0, prev_rel = std::numeric_limits<double>::infinity();
  bool decreasing = true;
  for (const auto& [radial, angular] : opt.levels) {
    lhs = integrate_annulus([&](const Vector& y) { return push_forward(f, g, y); }, inner, outer, radial, angular);
    rhs = detM * integrate_annulus(
                     [&](const Vector& u) {
                       const Vector x = chart->c + chart->M * u;
                       return g(x) * std::abs(f.jacobian(x));
                     },
                     chart->inner, chart->outer, radial, angular);
    const double rel = std::abs(lhs - rhs) / std::max(std::abs(rhs), 1e-300);
    if (rel > prev_rel && rel > 1e-12) decreasing = false;
    prev_rel = rel;
    levels.push_back({{"radial", radial}, {"angular", angular}, {"lhs", lhs}, {"rhs", rhs}, {"rel_discrepancy", rel}});
  }
  const double rel = prev_rel;

  const auto [radial, angular] = opt.levels.back();
  const double energy = integrate_annulus([&](const Vector& y) { return std::pow(h_function(f, y), n); }, inner,
                                          outer, radial, angular);
  const double preimage_area = detM * std::numbers::pi * (chart->outer * chart->outer - chart->inner * chart->inner);
  const double bound = std::pow(d, 0.5 * n - 1.0) * f.K_I() * f.K_O() * preimage_area;
  const bool energy_ok = energy <= bound * (1.0 + 1e-9);

  CheckReport r;
  r.check = "area";
  r.n_samples = static_cast<long>(radial) * angular;
  r.max_ratio = rel;
  r.pass = rel < opt.tol && energy_ok;
  r.details = {{"map", f.describe()},
               {"field", to_string(field)},
               {"inner", inner},
               {"outer", outer},
               {"lhs", lhs},
               {"rhs", rhs},
               {"rel_discrepancy", rel},
               {"decreasing", decreasing},
               {"levels", levels},
               {"energy", energy},
               {"energy_bound", bound},
               {"energy_slack", bound - energy},
               {"preimage_area", preimage_area},
               {"energy_ok", energy_ok},
               {"tol", opt.tol}};
  return r;
}

struct MetricQcOptions {
  int directions = 64;
  int ray_samples = 33;
  double tol = 1e-6;
  std::uint64_t seed = 0;
};

/// Two sides of H_{minv f}(y, r)^2 ≤ Σ_x ι(f, x) H*_f(x, r)^2 per radius.
/// L_{minv f} is the largest A_d distance from minv f(y) over sampled points
/// of the closed ball, l_{minv f} the smallest over its boundary. For each
/// fiber point x, U_f(x, r) is swept by the lifts from x of the sampled
/// rays: L*_f is the largest |x' - x| along those lifts and l*_f the
/// smallest at their endpoints. The component inequalities L^2 ≤ Σ ι L*^2
/// and l^2 ≥ Σ ι l*^2 are reported as well.
inline CheckReport metric_qc_check(const BranchedCover& f, const Vector& y, const std::vector<double>& radii,
                                   const MetricQcOptions& opt = {}) {
  if (y.size() != f.n()) throw InvalidArgument("metric_qc_check: point dimension mismatch");
  if (radii.empty() || opt.directions < 1 || opt.ray_samples < 2)
    throw InvalidArgument("metric_qc_check: need radii, directions and ray samples");
  const int n = f.n();
  const double branch_dist = f.distance_to_branch_values(y);
  for (double r : radii) {
    if (!(r > 0)) throw InvalidArgument("metric_qc_check: radii must be positive");
    if (branch_dist > 1e-12 && branch_dist <= r)
      throw InvalidArgument("metric_qc_check: radius " + std::to_string(r) +
                            " reaches a branch value; fiber neighborhoods merge");
  }

  std::vector<Vector> dirs;
  RandomStream rng(opt.seed, 0);
  for (int k = 0; k < opt.directions; ++k) {
    Vector u(n);
    if (n == 2) {
      const double th = 2.0 * std::numbers::pi * k / opt.directions;
      u << std::cos(th), std::sin(th);
    } else {
      for (int i = 0; i < n; ++i) u[i] = rng.normal();
      u.normalize();
    }
    dirs.push_back(u);
  }

  const AlmgrenPoint z = f.preimages(y);
  const std::vector<Vector> x0 = expand(z);
  const auto& entries = z.entries();
  // group[j] = index of the distinct fiber point carrying expanded entry j.
  std::vector<int> group;
  for (std::size_t e = 0; e < entries.size(); ++e)
    for (int m = 0; m < entries[e].w; ++m) group.push_back(static_cast<int>(e));

  CheckReport rep;
  rep.check = "metric-qc";
  nlohmann::json per_radius = nlohmann::json::array();
  double worst = 0.0;
  bool all_ok = true;
  long lift_failures = 0;
  for (double r : radii) {
    double L = 0.0, l = std::numeric_limits<double>::infinity();
    std::vector<double> Ls(entries.size(), 0.0), ls(entries.size(), std::numeric_limits<double>::infinity());
    LiftOptions lo;
    lo.samples = opt.ray_samples;
    for (const Vector& u : dirs) {
      LiftedPath lp;
      try {
        lp = lift_path(f, [&](double t) { return Vector(y + (t * r) * u); }, lo);
      } catch (const StepUnderflowError&) {
        ++lift_failures;
        continue;
      }
      for (int s = 0; s < opt.ray_samples; ++s) {
        const double dA = distance(f.preimages(y + (lp.ts[s] * r) * u), z).value;
        L = std::max(L, dA);
        if (s == opt.ray_samples - 1) l = std::min(l, dA);
        for (std::size_t j = 0; j < x0.size(); ++j) {
          const double dx = (lp.lifts[j][s] - x0[j]).norm();
          Ls[group[j]] = std::max(Ls[group[j]], dx);
          if (s == opt.ray_samples - 1) ls[group[j]] = std::min(ls[group[j]], dx);
        }
      }
      rep.n_samples += opt.ray_samples;
    }
    if (!(l > 0) || !std::isfinite(l)) throw NumericalError("metric_qc_check: degenerate sphere image");
    double sum_H2 = 0.0, sum_L2 = 0.0, sum_l2 = 0.0;
    nlohmann::json fiber = nlohmann::json::array();
    for (std::size_t e = 0; e < entries.size(); ++e) {
      const int w = entries[e].w;
      const double Hs = Ls[e] / ls[e];
      sum_H2 += w * Hs * Hs;
      sum_L2 += w * Ls[e] * Ls[e];
      sum_l2 += w * ls[e] * ls[e];
      fiber.push_back({{"x", std::vector<double>(entries[e].x.data(), entries[e].x.data() + n)},
                       {"index", w},
                       {"L_star", Ls[e]},
                       {"l_star", ls[e]},
                       {"H_star", Hs}});
    }
    const double H = L / l;
    const double ratio = H * H / sum_H2;
    const bool ok = ratio <= 1.0 + opt.tol && L * L <= sum_L2 * (1.0 + opt.tol) && l * l >= sum_l2 * (1.0 - opt.tol);
    all_ok = all_ok && ok;
    worst = std::max(worst, ratio);
    per_radius.push_back({{"r", r},
                          {"L_minv", L},
                          {"l_minv", l},
                          {"H_minv", H},
                          {"sum_H_star_sq", sum_H2},
                          {"ratio", ratio},
                          {"slack", sum_H2 - H * H},
                          {"L_sq_vs_sum", {L * L, sum_L2}},
                          {"l_sq_vs_sum", {l * l, sum_l2}},
                          {"pass", ok},
                          {"fiber", fiber}});
  }
  rep.excluded = lift_failures;
  rep.max_ratio = worst;
  rep.pass = all_ok && lift_failures == 0;
  rep.details = {{"map", f.describe()},
                 {"y", std::vector<double>(y.data(), y.data() + n)},
                 {"directions", opt.directions},
                 {"ray_samples", opt.ray_samples},
                 {"distance_to_branch_values", branch_dist},
                 {"tol", opt.tol},
                 {"radii", per_radius}};
  return rep;
}

}  // namespace almqr
