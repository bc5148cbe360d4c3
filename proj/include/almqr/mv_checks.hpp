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

#include <cmath>
#include <memory>
#include <vector>

#include "almqr/forms.hpp"
#include "almqr/multivalued.hpp"
#include "almqr/quadrature.hpp"
#include "almqr/report.hpp"

namespace almqr {

struct QrCurveOptions {
  long samples = 10000;
  std::uint64_t seed = 0;
  double tol = 1e-6;
  double exclusion_factor = 1e-3;  // times the region diameter
};

/// ρ(y) = |D minv f|^n / (d^{n/2-1} K_I ⋆ minv f*ω_n) over random y in the
/// region; PASS iff max ρ ≤ 1 + tol. Samples within exclusion_factor·diam of
/// f(B_f) are excluded and counted.
inline CheckReport qr_curve_check(CoverPtr f, const Region& region, const QrCurveOptions& opt = {}) {
  if (!f) throw InvalidArgument("qr_curve_check: null cover");
  const MultiValuedMap g = MultiValuedMap::inverse_of(f, region);
  const int n = f->n(), d = f->degree();
  const KForm omega = natural_form(n, d);
  const double radius = opt.exclusion_factor * region.diameter();
  const double constant = std::pow(static_cast<double>(d), 0.5 * n - 1.0) * f->K_I();

  CheckReport r;
  r.check = "qr-curve";
  Summary ratios, frames;
  Histogram hist(0.0, 1.1, 22);
  long degenerate = 0;
  for (long s = 0; s < opt.samples; ++s) {
    RandomStream rng(opt.seed, static_cast<std::uint64_t>(s));
    const Vector y = region.sample(rng);
    if (f->distance_to_branch_values(y) < radius) {
      ++r.excluded;
      continue;
    }
    MVDifferential D;
    try {
      D = differential(g, y);
    } catch (const SingularFiberError&) {
      ++r.excluded;
      continue;
    }
    const double star = hodge_star_top(pullback(D, omega).value);
    const double frame = D.frame_norm();
    if (!(star > 0)) {
      ++degenerate;
      continue;
    }
    const double rho = std::pow(frame, n) / (constant * star);
    ratios.add(rho);
    frames.add(frame);
    hist.add(rho);
  }
  r.n_samples = ratios.count;
  r.max_ratio = ratios.count ? ratios.max : 0.0;
  r.pass = ratios.count > 0 && degenerate == 0 && r.max_ratio <= 1.0 + opt.tol;
  r.details = {{"map", f->describe()},
               {"n", n},
               {"d", d},
               {"K_I", f->K_I()},
               {"constant", constant},
               {"min_ratio", ratios.count ? ratios.min : 0.0},
               {"mean_ratio", ratios.mean()},
               {"max_frame_norm", frames.count ? frames.max : 0.0},
               {"exclusion_radius", radius},
               {"nonpositive_pullback", degenerate},
               {"tol", opt.tol},
               {"histogram", hist.to_json()}};
  return r;
}

/// A compactly supported test form on R^m with its support box.
struct TestForm {
  KForm alpha;
  Vector lo, hi;
};

/// α = φ β with the bump φ(u) = exp(1 - 1/(1 - |u - c|^2 / r^2)) on the ball
/// B(c, r) and β a form on R^m whose derivative is known. dα = dφ ∧ β + φ dβ.
inline TestForm bump_test_form(const Vector& center, double radius, const KForm& beta) {
  if (!(radius > 0)) throw InvalidArgument("bump_test_form: radius must be positive");
  if (beta.d() != 1 || beta.n() != center.size())
    throw InvalidArgument("bump_test_form: beta must be a form on R^m");
  if (!detail::derivative_known(beta)) throw InvalidArgument("bump_test_form: beta needs a known derivative");
  const int m = static_cast<int>(center.size()), k = beta.degree();
  auto bump = [center, radius](const Vector& u, Vector* grad) {
    const double s = (u - center).squaredNorm() / (radius * radius);
    if (s >= 1.0) {
      if (grad) grad->setZero(u.size());
      return 0.0;
    }
    const double phi = std::exp(1.0 - 1.0 / (1.0 - s));
    if (grad) *grad = phi * (-1.0 / ((1.0 - s) * (1.0 - s))) * (2.0 / (radius * radius)) * (u - center);
    return phi;
  };
  auto bf = beta.coefficient_fn();
  const KForm dbeta = exterior_derivative(beta);
  auto dbf = dbeta.coefficient_fn();
  KForm::DerivativeFn der = [bump, bf, dbf, m, k] {
    return KForm(k + 1, m, 1, [bump, bf, dbf, m](const Vector& u) {
      Vector grad;
      const double phi = bump(u, &grad);
      Covector dphi(1, m);
      for (int i = 0; i < m; ++i) dphi.add_term(IndexMask{1} << i, grad[i]);
      return wedge(dphi, bf(u)) + phi * dbf(u);
    });
  };
  KForm alpha(k, m, 1, [bump, bf](const Vector& u) { return bump(u, nullptr) * bf(u); }, false, der);
  return {alpha, Vector(center.array() - radius), Vector(center.array() + radius)};
}

struct StokesOptions {
  std::vector<int> orders{16, 32, 64};
  double tol = 1e-3;
  /// Relative discrepancies below this count as converged when testing
  /// that refinement decreases the discrepancy.
  double floor = 1e-10;
};

/// Compares ∫ dα ∧ f*ω with (-1)^{m-k} ∫ α ∧ f*(dω) by tensor Gauss-Legendre
/// quadrature on the support box of α. The relative discrepancy is
/// |LHS - RHS| / max(∫|lhs integrand|, ∫|rhs integrand|).
inline CheckReport weak_stokes_check(const MultiValuedMap& f, const KForm& w, const TestForm& t,
                                     const StokesOptions& opt = {}) {
  const int m = f.m(), k = w.degree();
  if (t.alpha.d() != 1 || t.alpha.n() != m) throw InvalidArgument("weak_stokes_check: test form must live on R^m");
  if (t.alpha.degree() != m - k - 1)
    throw InvalidArgument("weak_stokes_check: test form must have degree m - k - 1");
  if (opt.orders.empty()) throw InvalidArgument("weak_stokes_check: no quadrature orders");
  const KForm dw = exterior_derivative(w).with_invariance(w.invariance());
  const KForm da = exterior_derivative(t.alpha);
  const double sign = (m - k) % 2 == 0 ? 1.0 : -1.0;

  struct Level {
    int order;
    double lhs, rhs, abs_lhs, abs_rhs;
  };
  std::vector<Level> levels;
  long evaluations = 0;
  for (int order : opt.orders) {
    const Eigen::Vector4d sums = integrate_box(
        [&](const Vector& x) -> Eigen::Vector4d {
          const Covector a = t.alpha.at(x), dA = da.at(x);
          if (a.is_zero() && dA.is_zero()) return Eigen::Vector4d::Zero();
          if (!f.domain().contains(x))
            throw DomainError("weak_stokes_check: test form support leaves the domain");
          const MVDifferential D = differential(f, x);
          ++evaluations;
          const double l = hodge_star_top(wedge(dA, pullback(D, w).value));
          const double rr = sign * hodge_star_top(wedge(a, pullback(D, dw).value));
          return {l, rr, std::abs(l), std::abs(rr)};
        },
        t.lo, t.hi, order);
    const Level lv{order, sums[0], sums[1], sums[2], sums[3]};
    levels.push_back(lv);
  }

  auto rel = [](const Level& l) {
    const double scale = std::max(l.abs_lhs, l.abs_rhs);
    return scale > 0 ? std::abs(l.lhs - l.rhs) / scale : 0.0;
  };
  nlohmann::json per_level = nlohmann::json::array();
  bool decreasing = true;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const Level& l = levels[i];
    per_level.push_back({{"order", l.order},
                         {"lhs", l.lhs},
                         {"rhs", l.rhs},
                         {"abs_discrepancy", std::abs(l.lhs - l.rhs)},
                         {"rel_discrepancy", rel(l)}});
    if (i > 0 && rel(l) > rel(levels[i - 1]) && rel(l) > opt.floor) decreasing = false;
  }
  const Level& fine = levels.back();
  double quad_error = 0.0;
  if (levels.size() > 1) {
    const Level& prev = levels[levels.size() - 2];
    quad_error = std::max(std::abs(fine.lhs - prev.lhs), std::abs(fine.rhs - prev.rhs));
  }
  const double scale = std::max(fine.abs_lhs, fine.abs_rhs);
  const bool converged = quad_error <= opt.tol * std::max(scale, 1e-300) || scale == 0.0;

  CheckReport r;
  r.check = "stokes";
  r.n_samples = evaluations;
  r.max_ratio = rel(fine);
  r.pass = r.max_ratio < opt.tol && decreasing && converged;
  r.details = {{"m", m},
               {"k", k},
               {"sign", sign},
               {"lhs", fine.lhs},
               {"rhs", fine.rhs},
               {"abs_discrepancy", std::abs(fine.lhs - fine.rhs)},
               {"rel_discrepancy", rel(fine)},
               {"scale", scale},
               {"quadrature_error_estimate", quad_error},
               {"quadrature_converged", converged},
               {"decreasing", decreasing},
               {"levels", per_level},
               {"tol", opt.tol}};
  return r;
}

}  // namespace almqr
