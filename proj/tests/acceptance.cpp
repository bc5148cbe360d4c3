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

// Acceptance criteria. Prints one PASS/FAIL line per criterion; exit status is
// nonzero when any selected criterion fails. Usage: acceptance [id ...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "almqr/covers.hpp"
#include "almqr/forms.hpp"
#include "almqr/geometry.hpp"
#include "almqr/lifting.hpp"
#include "almqr/measure.hpp"
#include "almqr/modulus.hpp"
#include "almqr/multivalued.hpp"
#include "almqr/mv_checks.hpp"
#include "test_support.hpp"

using namespace almqr;
using almqr::testing::random_affine_multi;
using almqr::testing::random_invariant_form;
using almqr::testing::random_lipschitz_multi;
using almqr::testing::random_point;
using almqr::testing::random_polynomial_form;
using almqr::testing::random_scalar_form;
using almqr::testing::random_vector;

namespace {

constexpr double kPi = std::numbers::pi;

struct Verdict {
  bool pass = true;
  std::ostringstream note;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) note << "first failure: " << what << "; ";
      pass = false;
    }
  }
};

struct Criterion {
  int id;
  const char* name;
  std::function<void(Verdict&)> run;
};

Matrix mat2(double a, double b, double c, double d) { return (Matrix(2, 2) << a, b, c, d).finished(); }

CoverPtr stretched_square(double lambda) {
  return std::make_shared<Precomposed>(mat2(lambda, 0, 0, 1), vec2(0, 0), std::make_shared<PlanarPower>(2));
}

CoverPtr sheared_cube() {
  return std::make_shared<Precomposed>(mat2(1, 0.7, 0, 1.3), vec2(0.2, -0.1), std::make_shared<PlanarPower>(3));
}

double brute_force_distance(const AlmgrenPoint& p, const AlmgrenPoint& q) {
  const auto xs = expand(p), ys = expand(q);
  std::vector<int> perm(xs.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t j = 0; j < xs.size(); ++j) s += (xs[j] - ys[perm[j]]).squaredNorm();
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::sqrt(best);
}

void metric_oracle(Verdict& v) {
  RandomStream rng(101, 0);
  long mismatches = 0, against_permutations = 0;
  for (int t = 0; t < 10000; ++t) {
    const int d = 2 + t % 5, n = 1 + (t / 5) % 4;
    const auto p = random_point(rng, d, n), q = random_point(rng, d, n);
    const auto fast = distance(p, q), slow = distance_bruteforce(p, q);
    if (fast.value != slow.value || fast.matching != slow.matching) ++mismatches;
    if (t % 10 == 0 && std::abs(fast.value - brute_force_distance(p, q)) > 1e-12 * (1 + fast.value))
      ++against_permutations;
  }
  v.require(mismatches == 0, "distance != distance_bruteforce");
  v.require(against_permutations == 0, "distance disagrees with the permutation oracle");
  v.note << "instances=10000 mismatches=" << mismatches << " oracle_mismatches=" << against_permutations;
}

void metric_axioms(Verdict& v) {
  RandomStream rng(102, 0);
  double worst = -std::numeric_limits<double>::infinity();
  bool symmetric = true, definite = true;
  for (int t = 0; t < 10000; ++t) {
    const int d = 1 + t % 6, n = 1 + (t / 6) % 4;
    const auto p = random_point(rng, d, n), q = random_point(rng, d, n), r = random_point(rng, d, n);
    const double pq = distance(p, q).value;
    worst = std::max(worst, distance(p, r).value - pq - distance(q, r).value);
    symmetric = symmetric && pq == distance(q, p).value;
    definite = definite && distance(p, p).value == 0.0 && (p == q || pq > 0.0);
  }
  v.require(worst <= 1e-12, "triangle inequality");
  v.require(symmetric, "symmetry");
  v.require(definite, "definiteness");
  v.note << "triples=10000 max_triangle_excess=" << worst;
}

void barycenter_lipschitz(Verdict& v) {
  RandomStream rng(103, 0);
  double worst = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const int d = 1 + t % 6, n = 1 + (t / 6) % 4;
    const auto p = random_point(rng, d, n), q = random_point(rng, d, n);
    const double dist = distance(p, q).value;
    if (dist == 0.0) continue;
    worst = std::max(worst, std::sqrt(double(d)) * (barycenter(p) - barycenter(q)).norm() / dist);
  }
  double diag_min = 1.0, diag_max = 1.0;
  for (int t = 0; t < 100; ++t) {
    const int d = 2 + t % 5, n = 1 + t % 4;
    const auto p = AlmgrenPoint::diagonal(random_vector(rng, n), d);
    const auto q = AlmgrenPoint::diagonal(random_vector(rng, n), d);
    const double r = std::sqrt(double(d)) * (barycenter(p) - barycenter(q)).norm() / distance(p, q).value;
    diag_min = std::min(diag_min, r);
    diag_max = std::max(diag_max, r);
  }
  v.require(worst <= 1 + 1e-12, "Lipschitz ratio above one");
  v.require(diag_min >= 1 - 1e-12 && diag_max <= 1 + 1e-12, "diagonal pairs do not attain equality");
  v.note << "pairs=10000 max_ratio=" << worst << " diagonal_ratio=[" << diag_min << "," << diag_max << "]";
}

void comass_natural(Verdict& v) {
  RandomStream rng(104, 0);
  double lo = 1.0, hi = 1.0;
  for (int n : {2, 3})
    for (int d : {2, 3}) {
      const KForm w = natural_form(n, d);
      for (int s = 0; s < 10; ++s) {
        const auto r = comass(w, random_vector(rng, n * d));
        lo = std::min(lo, r.value);
        hi = std::max(hi, r.value);
      }
    }
  v.require(lo >= 1 - 1e-6 && hi <= 1 + 1e-6, "comass outside [1-1e-6, 1+1e-6]");
  v.note << "points=40 range=[" << lo << "," << hi << "]";
}

KForm numeric_only(const KForm& w) {
  return KForm(w.degree(), w.n(), w.d(), w.coefficient_fn(), false, {}, w.invariance());
}

double coefficient_gap(const Covector& a, const Covector& b) { return (a - b).max_abs_coefficient(); }

void symmetrization(Verdict& v) {
  RandomStream rng(105, 0);
  double idem = 0, lin = 0, sup_ratio = 0, commute = 0;
  for (int trial = 0; trial < 4; ++trial) {
    const int n = 2, d = 2 + trial % 2, k = 1 + trial % 2;
    const auto g = GroupAction::symmetric(d);
    const KForm a = random_polynomial_form(rng, k, n, d), b = random_polynomial_form(rng, k, n, d);
    const KForm pa = symmetrize(a, g), ppa = symmetrize(pa, g), pb = symmetrize(b, g);
    const KForm l1 = symmetrize(add(scale(1.7, a), scale(-0.4, b)), g);
    const KForm l2 = add(scale(1.7, pa), scale(-0.4, pb));
    for (int s = 0; s < 20; ++s) {
      const auto x = random_vector(rng, n * d);
      const double scale_x = 1 + pa.at(x).max_abs_coefficient();
      idem = std::max(idem, coefficient_gap(ppa.at(x), pa.at(x)) / scale_x);
      lin = std::max(lin, coefficient_gap(l1.at(x), l2.at(x)) / (1 + l2.at(x).max_abs_coefficient()));
    }
    double sup_a = 0, sup_pa = 0;
    for (int s = 0; s < 10; ++s) {
      const auto x0 = random_vector(rng, n * d);
      for (const auto& sigma : g.elements()) {
        const auto x = act(sigma, n, x0);
        sup_a = std::max(sup_a, comass(a, x).value);
        sup_pa = std::max(sup_pa, comass(pa, x).value);
      }
    }
    sup_ratio = std::max(sup_ratio, sup_pa / sup_a);
    if (k == 1) {
      const KForm lhs = exterior_derivative(numeric_only(pa), 1e-3);
      const KForm rhs = symmetrize(exterior_derivative(a), g);
      for (int s = 0; s < 20; ++s) {
        const auto x = random_vector(rng, n * d);
        commute = std::max(commute, coefficient_gap(lhs.at(x), rhs.at(x)));
      }
    }
  }
  v.require(idem <= 1e-12, "idempotence");
  v.require(lin <= 1e-12, "linearity");
  v.require(sup_ratio <= 1 + 1e-12, "sup-norm expansion");
  v.require(commute <= 1e-6, "d o P != P o d");
  v.note << "idempotence=" << idem << " linearity=" << lin << " sup_ratio=" << sup_ratio << " d_commute=" << commute;
}

void split_pullback(Verdict& v) {
  RandomStream rng(106, 0);
  double worst = 0.0;
  int points = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const int d0 = 1 + trial % 2, d1 = 2, n = 2, m = 3;
    const auto f0 = random_affine_multi(rng, m, n, d0), f1 = random_affine_multi(rng, m, n, d1);
    const KForm w0 = random_invariant_form(rng, 1, n, d0), w1 = random_invariant_form(rng, 1 + trial % 2, n, d1);
    const KForm w = tensor_product(w0, w1);
    for (int s = 0; s < 100; ++s, ++points) {
      const Vector x = random_vector(rng, m, 0.5);
      const Covector lhs = pullback_pair(f0, f1, w, x).value;
      const Covector rhs = wedge(pullback(f0, w0, x).value, pullback(f1, w1, x).value);
      worst = std::max(worst, (lhs - rhs).max_abs_coefficient() / (1 + rhs.max_abs_coefficient()));
    }
  }
  v.require(points == 1000 && worst <= 1e-9, "split pullback mismatch");
  v.note << "points=" << points << " max_rel_gap=" << worst;
}

TestForm annulus_test_form(RandomStream& rng) {
  const double t = rng.uniform(0, 2 * kPi), r = rng.uniform(1.0, 1.5);
  const double radius = std::min(r - 0.5, 2.0 - r) * rng.uniform(0.5, 0.95);
  return bump_test_form(vec2(r * std::cos(t), r * std::sin(t)), radius, random_scalar_form(rng, 2));
}

void weak_stokes(Verdict& v) {
  RandomStream rng(107, 0);
  const auto g = MultiValuedMap::inverse_of(std::make_shared<PlanarPower>(2), Region::annulus(vec2(0, 0), 0.5, 2));
  std::vector<KForm> forms;
  std::vector<TestForm> tests;
  for (int i = 0; i < 5; ++i) forms.push_back(random_invariant_form(rng, 1, 2, 2));
  for (int i = 0; i < 5; ++i) tests.push_back(annulus_test_form(rng));
  double worst = 0.0;
  int fails = 0;
  for (const auto& w : forms)
    for (const auto& t : tests) {
      const CheckReport r = weak_stokes_check(g, w, t);
      worst = std::max(worst, r.max_ratio);
      if (!r.pass) ++fails;
    }
  v.require(fails == 0, "discrepancy not below 1e-3 or not decreasing");
  v.note << "pairs=25 failures=" << fails << " max_rel_discrepancy=" << worst;
}

void qr_curve_sharpness(Verdict& v) {
  double lo = 1.0, hi = 1.0;
  for (int d = 2; d <= 4; ++d) {
    QrCurveOptions opt;
    opt.samples = 10000;
    opt.seed = 108 + d;
    const CheckReport r = qr_curve_check(std::make_shared<PlanarPower>(d), Region::ball(vec2(0, 0), 2), opt);
    hi = std::max(hi, r.max_ratio);
    lo = std::min(lo, r.details["min_ratio"].get<double>());
    v.require(r.n_samples > 9000, "too many exclusions");
  }
  double distorted = 0.0;
  for (const auto& f : {stretched_square(1.5), sheared_cube()}) {
    QrCurveOptions opt;
    opt.samples = 10000;
    opt.seed = 113;
    distorted = std::max(distorted, qr_curve_check(f, Region::ball(vec2(0, 0), 2), opt).max_ratio);
  }
  v.require(lo >= 1 - 1e-9 && hi <= 1 + 1e-9, "power-map ratio not sharp");
  v.require(distorted <= 1 + 1e-6, "precomposed ratio above bound");
  v.note << "power_range=[" << lo << "," << hi << "] precomposed_max=" << distorted;
}

void upper_gradient(Verdict& v) {
  CurveFamily fam = CurveFamily::radial(vec2(0.1, 0), 0.5, 2.0, 16);
  for (auto& c : CurveFamily::circles(vec2(0.3, -0.2), 0.6, 1.5, 4, 64).curves) fam.curves.push_back(c);
  double conformal_gap = 0.0;
  for (const CoverPtr& f : std::vector<CoverPtr>{std::make_shared<PlanarPower>(2), std::make_shared<PlanarPower>(3),
                                                 std::make_shared<PlanarPower>(4), AffineCover::identity(2)}) {
    const CheckReport r = upper_gradient_check(*f, fam);
    v.require(r.pass && r.details["violation_fraction"].get<double>() == 0.0, f->describe() + " violates");
    conformal_gap = std::max(conformal_gap, r.details["max_relative_gap"].get<double>());
  }
  double distorted_max = 0.0;
  for (const CoverPtr& f : {stretched_square(1.7), sheared_cube()}) {
    const CheckReport r = upper_gradient_check(*f, CurveFamily::circles(vec2(0.2, 0.1), 0.5, 1.5, 6, 64));
    v.require(r.pass && r.details["violation_fraction"].get<double>() == 0.0, f->describe() + " leaves band");
    distorted_max = std::max(distorted_max, r.max_ratio / r.details["upper_constant"].get<double>());
  }
  v.note << "conformal_max_gap=" << conformal_gap << " distorted_max_ratio_over_bound=" << distorted_max;
}

void area_formula(Verdict& v) {
  double worst = 0.0, min_slack = std::numeric_limits<double>::infinity();
  for (int d : {2, 3, 4})
    for (auto [a, b] : {std::pair{0.5, 2.0}, std::pair{1.0, 3.0}})
      for (ScalarField g : {ScalarField::One, ScalarField::NormSquared, ScalarField::InverseNormPowN}) {
        const CheckReport r = area_formula_check(PlanarPower(d), g, a, b);
        worst = std::max(worst, r.max_ratio);
        min_slack = std::min(min_slack, r.details["energy_slack"].get<double>());
        v.require(r.max_ratio < 1e-3, "area discrepancy for " + to_string(g));
        v.require(r.details["energy_ok"].get<bool>(), "energy bound");
      }
  v.note << "runs=18 max_rel_discrepancy=" << worst << " min_energy_slack=" << min_slack;
}

void generalized_inverse_vanishes(Verdict& v) {
  RandomStream rng(111, 0);
  double worst = 0.0;
  for (int s = 0; s < 10000; ++s) {
    const int d = 2 + s % 5;
    worst = std::max(worst, generalized_inverse(PlanarPower(d), random_vector(rng, 2, 2.0)).norm());
  }
  v.require(worst < 1e-8, "|g| too large");
  v.note << "samples=10000 max_norm=" << worst;
}

void geometric_qc(Verdict& v) {
  const double R = std::exp(1.0), exact = 2 * kPi / std::log(R);
  const CurveFamily ring = CurveFamily::radial(vec2(0, 0), 1.0, R, 2048);
  const double m128 = discrete_modulus(ring, Grid2::around(vec2(0, 0), R * 1.001, 128)).value;
  const double m256 = discrete_modulus(ring, Grid2::around(vec2(0, 0), R * 1.001, 256)).value;
  const double err = std::abs(m256 / exact - 1), drift = std::abs(m256 / m128 - 1);
  v.require(err <= 0.05, "annulus modulus off by more than 5%");
  v.require(drift <= 0.05, "modulus not stable between the two finest grids");
  v.note << "ring_rel_error=" << err << " grid_drift=" << drift;
  const CurveFamily fam = CurveFamily::radial(vec2(0, 0), 1.0, R, 512, 32);
  for (const CoverPtr& f : {CoverPtr(std::make_shared<PlanarPower>(2)), CoverPtr(std::make_shared<PlanarPower>(3)),
                            stretched_square(1.5)}) {
    const CheckReport r = pushforward_modulus_check(*f, fam, Grid2::around(vec2(0, 0), R * 1.001, 128));
    const double ratio = r.details["ratio"].get<double>(), K = r.details["K_I_K_O"].get<double>();
    v.require(ratio >= 1 / K - 0.05 && ratio <= K + 0.05, f->describe() + " modulus ratio out of band");
    v.note << " " << f->describe() << "_ratio=" << ratio << "/K=" << K;
  }
}

void ahlfors_sweep(Verdict& v) {
  std::vector<Vector> centers;
  for (int k = 0; k < 10; ++k) {
    const double rho = 0.15 * k, t = 0.7 * k;
    centers.push_back(vec2(rho * std::cos(t), rho * std::sin(t)));
  }
  std::vector<double> radii;
  for (int k = 0; k < 10; ++k) radii.push_back(0.02 * std::pow(50.0, k / 9.0));
  const auto out = ahlfors_sampler(PlanarPower(2), centers, radii, 100000, 114);
  double worst = 0.0, worst_z = 0.0;
  int violations = 0;
  for (const OmegaFSample& s : out) {
    if (!s.within_bound()) ++violations;
    worst = std::max(worst, s.ratio);
    if (s.ratio_sigma > 0) worst_z = std::max(worst_z, (s.ratio - 1) / s.ratio_sigma);
  }
  v.require(out.size() == 100 && violations == 0, "ball measure above bound");
  v.note << "balls=" << out.size() << " samples_per_ball=100000 max_ratio=" << worst
         << " max_sigma_excess=" << worst_z;
}

void interpolation(Verdict& v) {
  RandomStream rng(115, 0);
  double lip = 0.0, dev = 0.0;
  for (int d : {2, 3})
    for (int trial = 0; trial < 3; ++trial) {
      const auto f = random_lipschitz_multi(rng, 2, 2, d);
      const double eps = 0.05 + 0.1 * trial;
      const Interpolation I = interpolate_feps(f, eps);
      double deviation = 0.0;
      for (int s = 0; s < 2000; ++s) {
        const Vector x = f.domain().sample(rng);
        deviation = std::max(deviation, distance(f(x), I.map(x)).value);
      }
      const double l = sampled_lipschitz(I.map, 2000, 116 + trial);
      lip = std::max(lip, l / ((3 + 2 * d) * I.L_eff));
      dev = std::max(dev, deviation / (2 * I.L_eff * eps));
    }
  v.require(lip <= 1 + 1e-6, "LIP(f_eps) above (3+2d)L");
  v.require(dev <= 1 + 1e-6, "deviation above 2 L eps");
  v.note << "maps=6 lip_over_bound=" << lip << " deviation_over_bound=" << dev;
}

void preimage_measure(Verdict& v) {
  const std::vector<CoverPtr> maps{
      std::make_shared<PlanarPower>(2), std::make_shared<PlanarPower>(3), stretched_square(1.5),
      std::make_shared<WindingMap3D>(2),
      std::make_shared<ComplexPolynomial>(std::vector<Complex>{{0.3, -0.2}, {1, 1}, {0, 0}, {2, 0.5}})};
  double worst = 0.0;
  int runs = 0;
  for (const auto& f : maps)
    for (double c : {0.0, 0.7})
      for (double r : {0.05, 0.3}) {
        const CheckReport rep = preimage_measure_check(*f, f->preimages(Vector::Constant(f->n(), c)), r, 20000, 117);
        v.require(rep.pass, f->describe() + " preimage ratio above d(1+3 sigma)");
        worst = std::max(worst, rep.details["ratio"].get<double>() / f->degree());
        ++runs;
      }
  v.note << "balls=" << runs << " max_ratio_over_d=" << worst;
}

void monodromy(Verdict& v) {
  PlanarPower f(2);
  auto gamma = [](double t) { return vec2(std::cos(2 * kPi * t), std::sin(2 * kPi * t)); };
  const auto lp = lift_path(f, gamma);
  v.require(lp.closed_with_swap() && lp.monodromy == std::vector<int>{1, 0}, "lift endpoints not swapped");
  const double closure = distance(minv(f, gamma(1.0)), minv(f, gamma(0.0))).value;
  double step = 0.0;
  for (int s = 1; s <= 1000; ++s)
    step = std::max(step, distance(minv(f, gamma(s / 1000.0)), minv(f, gamma((s - 1) / 1000.0))).value);
  const double lift_gap = (lp.lifts[0].back() - lp.lifts[1].front()).norm();
  v.require(closure < 1e-12, "minv o gamma not closed");
  v.require(step < 1e-2, "minv o gamma jumps");
  v.require(lift_gap < 1e-9, "lift 0 does not end at the start of lift 1");
  v.note << "monodromy=[1,0] closure=" << closure << " max_step=" << step << " endpoint_gap=" << lift_gap;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "metric-oracle", metric_oracle},
      {2, "metric-axioms", metric_axioms},
      {3, "barycenter-lipschitz", barycenter_lipschitz},
      {4, "comass-natural-form", comass_natural},
      {5, "symmetrization", symmetrization},
      {6, "split-pullback", split_pullback},
      {7, "weak-stokes", weak_stokes},
      {8, "qr-curve-sharpness", qr_curve_sharpness},
      {9, "upper-gradient", upper_gradient},
      {10, "area-formula", area_formula},
      {11, "generalized-inverse", generalized_inverse_vanishes},
      {12, "geometric-qc", geometric_qc},
      {13, "ahlfors-upper-bound", ahlfors_sweep},
      {14, "interpolation", interpolation},
      {15, "preimage-measure", preimage_measure},
      {16, "monodromy", monodromy},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& c : all) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.note << "error: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %02d %-22s %s (%.1fs)\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.note.str().c_str(), secs);
    std::fflush(stdout);
    if (!v.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
