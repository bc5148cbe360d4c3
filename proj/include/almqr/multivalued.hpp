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
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "almqr/almgren.hpp"
#include "almqr/assignment.hpp"
#include "almqr/covers.hpp"
#include "almqr/exterior.hpp"
#include "almqr/forms.hpp"
#include "almqr/region.hpp"
#include "almqr/rng.hpp"

namespace almqr {

enum class Provenance { InverseOfCover, SyntheticLipschitz, Interpolated };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::InverseOfCover: return "inverse-of-cover";
    case Provenance::SyntheticLipschitz: return "synthetic-lipschitz";
    case Provenance::Interpolated: return "interpolated";
  }
  return "unknown";
}

/// Branch values with their linear maps, listed in expand() order.
struct BranchJet {
  std::vector<Vector> values;
  std::vector<Matrix> L;
};

/// f: U ⊂ R^m -> A_d(R^n).
class MultiValuedMap {
public:
  using EvalFn = std::function<AlmgrenPoint(const Vector&)>;
  using JetFn = std::function<BranchJet(const Vector&)>;
  using BranchFn = std::function<Vector(const Vector&)>;
  using JacobianFn = std::function<Matrix(const Vector&)>;

  MultiValuedMap(Region domain, int n, int d, EvalFn eval, Provenance provenance, JetFn jet = {},
                 std::optional<double> lipschitz = std::nullopt)
      : domain_(std::move(domain)), n_(n), d_(d), eval_(std::move(eval)), provenance_(provenance),
        jet_(std::move(jet)), lipschitz_(lipschitz) {
    if (n < 1 || d < 1) throw InvalidArgument("MultiValuedMap: need n, d >= 1");
    if (lipschitz && !(*lipschitz >= 0)) throw InvalidArgument("MultiValuedMap: negative Lipschitz bound");
  }

  /// minv f on a region of the target; branch differentials Df(x_j)^{-1}.
  static MultiValuedMap inverse_of(CoverPtr f, Region domain) {
    if (!f) throw InvalidArgument("inverse_of: null cover");
    if (domain.dim() != f->n()) throw InvalidArgument("inverse_of: domain dimension must equal n");
    auto eval = [f](const Vector& y) { return f->preimages(y); };
    auto jet = [f](const Vector& y) {
      BranchJet j{expand(f->preimages(y)), inverse_branch_differentials(*f, y)};
      return j;
    };
    MultiValuedMap out(std::move(domain), f->n(), f->degree(), eval, Provenance::InverseOfCover, jet);
    out.cover_ = std::move(f);
    return out;
  }

  /// ⟦f_1, ..., f_d⟧ from single-valued branches. Jacobians are optional.
  static MultiValuedMap from_branches(Region domain, int n, std::vector<BranchFn> branches,
                                      std::vector<JacobianFn> jacobians = {},
                                      std::optional<double> lipschitz = std::nullopt) {
    if (branches.empty()) throw InvalidArgument("from_branches: no branches");
    if (!jacobians.empty() && jacobians.size() != branches.size())
      throw InvalidArgument("from_branches: one Jacobian per branch required");
    const int d = static_cast<int>(branches.size());
    auto bs = std::make_shared<const std::vector<BranchFn>>(std::move(branches));
    auto eval = [bs, n](const Vector& x) {
      std::vector<Vector> v;
      for (const auto& b : *bs) {
        v.push_back(b(x));
        if (v.back().size() != n) throw InvalidArgument("from_branches: branch has wrong dimension");
      }
      return AlmgrenPoint::from_tuple(v);
    };
    JetFn jet;
    if (!jacobians.empty()) {
      auto js = std::make_shared<const std::vector<JacobianFn>>(std::move(jacobians));
      jet = [bs, js, d](const Vector& x) {
        std::vector<std::pair<Vector, Matrix>> pairs;
        for (int j = 0; j < d; ++j) pairs.emplace_back((*bs)[j](x), (*js)[j](x));
        std::stable_sort(pairs.begin(), pairs.end(),
                         [](const auto& a, const auto& b) { return lex_less(a.first, b.first); });
        BranchJet out;
        for (auto& [v, l] : pairs) {
          out.values.push_back(std::move(v));
          out.L.push_back(std::move(l));
        }
        return out;
      };
    }
    return MultiValuedMap(std::move(domain), n, d, eval, Provenance::SyntheticLipschitz, jet, lipschitz);
  }

  /// d⟦Ax + b⟧.
  static MultiValuedMap affine(Region domain, Matrix a, Vector b, int d) {
    if (a.cols() != domain.dim() || a.rows() != b.size()) throw InvalidArgument("affine: shape mismatch");
    const double lip = std::sqrt(static_cast<double>(d)) * Eigen::JacobiSVD<Matrix>(a).singularValues()[0];
    auto eval = [a, b, d](const Vector& x) { return AlmgrenPoint::diagonal(a * x + b, d); };
    auto jet = [a, b, d](const Vector& x) {
      return BranchJet{std::vector<Vector>(d, Vector(a * x + b)), std::vector<Matrix>(d, a)};
    };
    return MultiValuedMap(std::move(domain), static_cast<int>(a.rows()), d, eval,
                          Provenance::SyntheticLipschitz, jet, lip);
  }

  int m() const { return domain_.dim(); }
  int n() const { return n_; }
  int d() const { return d_; }
  const Region& domain() const { return domain_; }
  Provenance provenance() const { return provenance_; }
  std::optional<double> lipschitz() const { return lipschitz_; }
  const BranchedCover* cover() const { return cover_.get(); }
  bool has_exact_differential() const { return static_cast<bool>(jet_); }

  AlmgrenPoint operator()(const Vector& x) const {
    if (x.size() != m()) throw InvalidArgument("MultiValuedMap: point has wrong dimension");
    AlmgrenPoint p = eval_(x);
    if (p.ambient_dim() != n_ || p.total_weight() != d_)
      throw NumericalError("MultiValuedMap: evaluation returned a point of the wrong shape");
    return p;
  }

  BranchJet exact_jet(const Vector& x) const {
    if (!jet_) throw InvalidArgument("MultiValuedMap: no exact branch differentials");
    return jet_(x);
  }

private:
  Region domain_;
  int n_, d_;
  EvalFn eval_;
  Provenance provenance_;
  JetFn jet_;
  std::optional<double> lipschitz_;
  CoverPtr cover_;
};

/// T_{x0} f(x) = Σ_j ⟦f_j(x0) + L_j (x - x0)⟧.
struct MVDifferential {
  Vector x0;
  std::vector<Vector> values;
  std::vector<Matrix> L;
  bool exact = false;
  bool ambiguous = false;
  bool on_singular_set = false;

  int d() const { return static_cast<int>(values.size()); }

  /// |Df| = (Σ_j ‖L_j‖^2)^{1/2}, operator norms.
  double frame_norm() const {
    double s = 0.0;
    for (const Matrix& l : L) {
      const double nrm = l.size() ? Eigen::JacobiSVD<Matrix>(l).singularValues()[0] : 0.0;
      s += nrm * nrm;
    }
    return std::sqrt(s);
  }

  /// (f_1(x0), ..., f_d(x0)) ∈ (R^n)^d.
  Vector stacked_values() const { return stack_vectors(values); }
  /// The nd x m matrix with blocks L_1, ..., L_d.
  Matrix stacked() const {
    const int n = static_cast<int>(L.front().rows()), m = static_cast<int>(L.front().cols());
    Matrix a(n * d(), m);
    for (int j = 0; j < d(); ++j) a.middleRows(j * n, n) = L[j];
    return a;
  }

  static Vector stack_vectors(const std::vector<Vector>& vs) {
    const Eigen::Index n = vs.front().size();
    Vector s(n * static_cast<Eigen::Index>(vs.size()));
    for (std::size_t j = 0; j < vs.size(); ++j) s.segment(j * n, n) = vs[j];
    return s;
  }
};

namespace detail {

// Groups of branches whose values agree within tol (single linkage); each
// group gets the average of its L's. Returns true if some group has size > 1.
inline bool enforce_coincidence(const std::vector<Vector>& values, std::vector<Matrix>& L, double tol) {
  const int d = static_cast<int>(values.size());
  std::vector<int> label(d);
  std::iota(label.begin(), label.end(), 0);
  auto find = [&](int i) {
    while (label[i] != i) i = label[i] = label[label[i]];
    return i;
  };
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if ((values[i] - values[j]).norm() <= tol) label[find(i)] = find(j);
  bool collided = false;
  for (int r = 0; r < d; ++r) {
    if (find(r) != r) continue;
    std::vector<int> group;
    for (int i = 0; i < d; ++i)
      if (find(i) == r) group.push_back(i);
    if (group.size() < 2) continue;
    collided = true;
    Matrix avg = Matrix::Zero(L[r].rows(), L[r].cols());
    for (int i : group) avg += L[i];
    avg /= static_cast<double>(group.size());
    for (int i : group) L[i] = avg;
  }
  return collided;
}

inline double coincidence_tolerance(const std::vector<Vector>& values) {
  double scale = 0.0;
  for (const Vector& v : values) scale = std::max(scale, v.norm());
  return 1e-8 * (1.0 + scale);
}

// Optimal matching of base -> q; sets `ambiguous` when a 2-swap between
// branches in different groups costs within 1e-12 of the optimum.
inline std::vector<int> match_fiber(const std::vector<Vector>& base, const std::vector<Vector>& q,
                                    double group_tol, bool& ambiguous) {
  const Matrix c = squared_distance_matrix(base, q);
  const Assignment a = solve_assignment_lexmin(c);
  const int d = static_cast<int>(base.size());
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      if ((base[i] - base[j]).norm() <= group_tol) continue;
      if ((q[a.perm[i]] - q[a.perm[j]]).norm() <= group_tol) continue;
      const double delta = c(i, a.perm[j]) + c(j, a.perm[i]) - c(i, a.perm[i]) - c(j, a.perm[j]);
      if (delta <= 1e-12) ambiguous = true;
    }
  return a.perm;
}

}  // namespace detail

/// Matching-based differential. Uses exact branch differentials when the map
/// carries them (unless force_numeric); otherwise central differences with
/// the fibers at x ± h e_i matched to the fiber at x.
inline MVDifferential differential(const MultiValuedMap& f, const Vector& x, double h = 1e-5,
                                   bool force_numeric = false) {
  if (x.size() != f.m()) throw InvalidArgument("differential: point has wrong dimension");
  if (!(h > 0)) throw InvalidArgument("differential: step must be positive");
  MVDifferential D;
  D.x0 = x;
  if (f.has_exact_differential() && !force_numeric) {
    BranchJet j = f.exact_jet(x);
    D.values = std::move(j.values);
    D.L = std::move(j.L);
    D.exact = true;
  } else {
    if (f.domain().margin(x) < h) throw DomainError("differential: point closer than h to the boundary");
    D.values = expand(f(x));
    const int d = D.d(), m = f.m();
    const double tol = detail::coincidence_tolerance(D.values);
    D.L.assign(d, Matrix(f.n(), m));
    for (int i = 0; i < m; ++i) {
      Vector xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const std::vector<Vector> qp = expand(f(xp)), qm = expand(f(xm));
      const auto ap = detail::match_fiber(D.values, qp, tol, D.ambiguous);
      const auto am = detail::match_fiber(D.values, qm, tol, D.ambiguous);
      for (int j = 0; j < d; ++j) D.L[j].col(i) = (qp[ap[j]] - qm[am[j]]) / (2.0 * h);
    }
  }
  D.on_singular_set =
      detail::enforce_coincidence(D.values, D.L, detail::coincidence_tolerance(D.values));
  return D;
}

/// A point x and the covector (f*ω)_x on R^m.
struct PullbackSample {
  Vector x;
  Covector value;
};

namespace detail {
inline PullbackSample pullback_stacked(const Vector& x, const Vector& F, const Matrix& DF, const KForm& w) {
  return {x, pullback(w.at(F), DF)};
}

inline std::vector<int> inverse_perm(const std::vector<int>& s) {
  std::vector<int> inv(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) inv[s[i]] = static_cast<int>(i);
  return inv;
}
}  // namespace detail

/// (f*ω)_x = ω_{f(x)} ∘ D_x f for a fully invariant ω on (R^n)^d.
inline PullbackSample pullback(const MVDifferential& D, const KForm& w) {
  if (D.values.empty()) throw InvalidArgument("pullback: empty differential");
  if (w.d() != D.d() || w.n() != D.values.front().size())
    throw InvalidArgument("pullback: form lives on a different (R^n)^d");
  if (!is_fully_invariant(w))
    throw InvalidArgument(
        "pullback: form is not invariant under all block permutations; split-invariant forms "
        "pull back only by explicit pairs (use pullback_pair)");
  return detail::pullback_stacked(D.x0, D.stacked_values(), D.stacked(), w);
}

inline PullbackSample pullback(const MultiValuedMap& f, const KForm& w, const Vector& x, double h = 1e-5) {
  return pullback(differential(f, x, h), w);
}

/// ⟦f_0, f_1⟧*ω for ω invariant under S_{d_0} x S_{d_1}.
inline PullbackSample pullback_pair(const MVDifferential& D0, const MVDifferential& D1, const KForm& w) {
  const Invariance tag = w.invariance();
  const bool split_ok = tag.kind == Invariance::Kind::Split && tag.d0 == D0.d() && tag.d1 == D1.d();
  if (!split_ok && !is_fully_invariant(w))
    throw InvalidArgument("pullback_pair: form must be split-invariant with matching block counts");
  if (w.d() != D0.d() + D1.d()) throw InvalidArgument("pullback_pair: block count mismatch");
  if (D0.x0.size() != D1.x0.size()) throw InvalidArgument("pullback_pair: domains differ");
  const Matrix A0 = D0.stacked(), A1 = D1.stacked();
  Matrix A(A0.rows() + A1.rows(), A0.cols());
  A << A0, A1;
  Vector F(A.rows());
  F << D0.stacked_values(), D1.stacked_values();
  return detail::pullback_stacked(D0.x0, F, A, w);
}

inline PullbackSample pullback_pair(const MultiValuedMap& f0, const MultiValuedMap& f1, const KForm& w,
                                    const Vector& x, double h = 1e-5) {
  return pullback_pair(differential(f0, x, h), differential(f1, x, h), w);
}

/// Largest coefficient change of f*ω when the branch labels are permuted
/// at random `trials` times.
inline double relabel_deviation(const MVDifferential& D, const KForm& w, RandomStream& rng, int trials = 5) {
  const Covector ref = pullback(D, w).value;
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const std::vector<int> s = rng.permutation(D.d());
    MVDifferential P = D;
    for (int j = 0; j < D.d(); ++j) {
      P.values[j] = D.values[s[j]];
      P.L[j] = D.L[s[j]];
    }
    worst = std::max(worst, (pullback(P, w).value - ref).max_abs_coefficient());
  }
  return worst;
}

/// ⋆α for a top-degree covector: its coefficient against vol.
inline double hodge_star_top(const Covector& a) {
  if (a.degree() != a.dim()) throw InvalidArgument("hodge_star_top: covector is not of top degree");
  const IndexMask full = a.dim() >= 64 ? ~IndexMask{0} : (IndexMask{1} << a.dim()) - 1;
  return a.coefficient(full);
}

/// Largest sampled d_A(f(x), f(y)) / |x - y| over `pairs` pairs at
/// log-uniform separations in [1e-4, 1] times the domain diameter.
inline double sampled_lipschitz(const MultiValuedMap& f, int pairs, std::uint64_t seed) {
  const double diam = f.domain().diameter();
  double best = 0.0;
  for (int p = 0; p < pairs; ++p) {
    RandomStream rng(seed, static_cast<std::uint64_t>(p));
    const Vector x = f.domain().sample(rng);
    Vector y;
    for (int attempt = 0;; ++attempt) {
      Vector u(x.size());
      for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = rng.normal();
      const double r = diam * std::pow(10.0, -4.0 * rng.uniform());
      y = x + r * u.normalized();
      if (f.domain().contains(y)) break;
      if (attempt > 1000) throw NumericalError("sampled_lipschitz: could not place a partner point");
    }
    const double sep = (x - y).norm();
    if (sep > 0) best = std::max(best, distance(f(x), f(y)).value / sep);
  }
  return best;
}

/// η_ε(x) = (1 - (φ(x) - ε)_+ / (L ε))_+ with φ = d_A(f(x), d⟦b(f(x))⟧).
/// (φ - ε)_+ / L is a lower bound for dist(F_ε, x), so η_ε is 1/ε-Lipschitz,
/// equals 1 on F_ε and vanishes off F_{(1+L)ε}.
inline double feps_eta(double phi, double eps, double L) {
  return std::clamp(((1.0 + L) * eps - phi) / (L * eps), 0.0, 1.0);
}

struct Interpolation {
  MultiValuedMap map;
  double eps = 0.0, L = 0.0, L_eff = 0.0;
  /// True when every probe point lies in F_ε, so f_ε = d⟦b(f)⟧ throughout.
  bool covers_domain = false;
  long probes = 0;
};

/// f_ε = ⟦(1 - η_ε) f_j + η_ε b(f)⟧_j with the effective constant
/// L_eff = max(L, 1).
inline Interpolation interpolate_feps(const MultiValuedMap& f, double eps,
                                      std::optional<double> lipschitz = std::nullopt, int probes = 4096) {
  if (!(eps > 0)) throw InvalidArgument("interpolate_feps: eps must be positive");
  const std::optional<double> lip = lipschitz ? lipschitz : f.lipschitz();
  if (!lip) throw InvalidArgument("interpolate_feps: a Lipschitz bound is required");
  const double L_eff = std::max(*lip, 1.0);
  auto base = std::make_shared<const MultiValuedMap>(f);
  auto eval = [base, eps, L_eff](const Vector& x) {
    const AlmgrenPoint p = (*base)(x);
    const Vector b = barycenter(p);
    const double eta = feps_eta(distance_to_diagonal(p), eps, L_eff);
    std::vector<AlmgrenPoint::Entry> e;
    for (const auto& [y, w] : p.entries()) e.push_back({Vector((1.0 - eta) * y + eta * b), w});
    return AlmgrenPoint(p.ambient_dim(), std::move(e));
  };
  Interpolation out{MultiValuedMap(f.domain(), f.n(), f.d(), eval, Provenance::Interpolated, {},
                                   (3.0 + 2.0 * f.d()) * L_eff),
                    eps, *lip, L_eff, true, probes};
  LowDiscrepancy q(f.m());
  const Vector lo = f.domain().lower(), hi = f.domain().upper();
  for (int i = 0; i < probes; ++i) {
    const auto u = q.next();
    Vector x(f.m());
    for (int k = 0; k < f.m(); ++k) x[k] = lo[k] + (hi[k] - lo[k]) * u[k];
    if (!f.domain().contains(x)) continue;
    if (distance_to_diagonal(f(x)) >= eps) {
      out.covers_domain = false;
      break;
    }
  }
  return out;
}

}  // namespace almqr
