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
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "almqr/errors.hpp"
#include "almqr/exterior.hpp"
#include "almqr/polynomial.hpp"

namespace almqr {

/// Symmetry a form is known to have under block permutations of (R^n)^d.
struct Invariance {
  enum class Kind { None, Full, Split };
  Kind kind = Kind::None;
  int d0 = 0, d1 = 0;

  static Invariance none() { return {}; }
  static Invariance full() { return {Kind::Full, 0, 0}; }
  static Invariance split(int d0, int d1) { return {Kind::Split, d0, d1}; }

  bool operator==(const Invariance&) const = default;
};

inline std::string to_string(const Invariance& t) {
  switch (t.kind) {
    case Invariance::Kind::Full: return "full";
    case Invariance::Kind::Split:
      return "split(" + std::to_string(t.d0) + "," + std::to_string(t.d1) + ")";
    case Invariance::Kind::None: return "none";
  }
  return "none";
}

/// A finite group of permutations of {0..d-1}; σ[j] is the image of j.
/// σ acts on (R^n)^d by σ·(x_0, ..., x_{d-1}) = (x_{σ^{-1}(0)}, ..., x_{σ^{-1}(d-1)}).
class GroupAction {
public:
  GroupAction(int d, std::vector<std::vector<int>> elements, Invariance tag)
      : d_(d), elements_(std::move(elements)), tag_(tag) {
    for (const auto& s : elements_) {
      std::vector<int> sorted = s;
      std::sort(sorted.begin(), sorted.end());
      for (int j = 0; j < d_; ++j)
        if (static_cast<int>(sorted.size()) != d_ || sorted[j] != j)
          throw InvalidArgument("GroupAction: element is not a permutation of {0..d-1}");
    }
  }

  /// S_d.
  static GroupAction symmetric(int d) {
    if (d < 1 || d > 8) throw InvalidArgument("GroupAction: symmetric group supported for 1 <= d <= 8");
    std::vector<int> p(d);
    std::iota(p.begin(), p.end(), 0);
    std::vector<std::vector<int>> el;
    do el.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
    return GroupAction(d, std::move(el), Invariance::full());
  }

  /// S_{d0} × S_{d1}, the first factor permuting blocks 0..d0-1.
  static GroupAction product(int d0, int d1) {
    const auto a = symmetric(d0), b = symmetric(d1);
    std::vector<std::vector<int>> el;
    for (const auto& s : a.elements())
      for (const auto& t : b.elements()) {
        std::vector<int> p(s);
        for (int j : t) p.push_back(j + d0);
        el.push_back(std::move(p));
      }
    return GroupAction(d0 + d1, std::move(el), Invariance::split(d0, d1));
  }

  int d() const { return d_; }
  std::size_t order() const { return elements_.size(); }
  const std::vector<std::vector<int>>& elements() const { return elements_; }
  Invariance tag() const { return tag_; }

private:
  int d_;
  std::vector<std::vector<int>> elements_;
  Invariance tag_;
};

/// Coordinate map of the block action: (σ·x)_a = x_{src[a]}.
inline std::vector<int> block_source(const std::vector<int>& sigma, int n) {
  const int d = static_cast<int>(sigma.size());
  std::vector<int> inv(d);
  for (int j = 0; j < d; ++j) inv[sigma[j]] = j;
  std::vector<int> src(n * d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < n; ++i) src[j * n + i] = inv[j] * n + i;
  return src;
}

inline Eigen::VectorXd act(const std::vector<int>& sigma, int n, const Eigen::VectorXd& x) {
  const auto src = block_source(sigma, n);
  Eigen::VectorXd y(x.size());
  for (Eigen::Index a = 0; a < x.size(); ++a) y[a] = x[src[a]];
  return y;
}

inline Eigen::MatrixXd act(const std::vector<int>& sigma, int n, const Eigen::MatrixXd& v) {
  const auto src = block_source(sigma, n);
  Eigen::MatrixXd w(v.rows(), v.cols());
  for (Eigen::Index a = 0; a < v.rows(); ++a) w.row(a) = v.row(src[a]);
  return w;
}

/// A differential k-form on (R^n)^d: a coefficient function x ↦ ω_x.
class KForm {
public:
  using CoefficientFn = std::function<Covector(const Eigen::VectorXd&)>;
  using DerivativeFn = std::function<KForm()>;

  KForm() = default;
  KForm(int k, int n, int d, CoefficientFn fn, bool constant = false, DerivativeFn derivative = {},
        Invariance tag = Invariance::none())
      : k_(k), n_(n), d_(d), fn_(std::move(fn)), constant_(constant),
        derivative_(std::move(derivative)), tag_(tag) {
    if (n < 1 || d < 1 || n * d > kMaxCoordinates)
      throw InvalidArgument("KForm: need n, d >= 1 and n*d <= 64");
    if (k < 0 || k > n * d) throw InvalidArgument("KForm: degree out of range");
  }

  static KForm constant_form(int n, int d, Covector c, Invariance tag = Invariance::none()) {
    if (c.dim() != n * d) throw InvalidArgument("KForm: covector dimension mismatch");
    const int k = c.degree();
    auto shared = std::make_shared<const Covector>(std::move(c));
    return KForm(k, n, d, [shared](const Eigen::VectorXd&) { return *shared; }, true, {}, tag);
  }

  static KForm zero(int k, int n, int d) {
    return constant_form(n, d, Covector(k, n * d), Invariance::full());
  }

  int degree() const { return k_; }
  int n() const { return n_; }
  int d() const { return d_; }
  int dim() const { return n_ * d_; }
  bool is_constant() const { return constant_; }
  bool has_analytic_derivative() const { return static_cast<bool>(derivative_); }
  Invariance invariance() const { return tag_; }
  const DerivativeFn& analytic_derivative() const { return derivative_; }
  const CoefficientFn& coefficient_fn() const { return fn_; }

  KForm with_invariance(Invariance tag) const {
    KForm f = *this;
    f.tag_ = tag;
    return f;
  }

  Covector at(const Eigen::VectorXd& x) const {
    if (x.size() != dim()) throw InvalidArgument("KForm: point has wrong dimension");
    return fn_(x);
  }

  double operator()(const Eigen::VectorXd& x, const Eigen::MatrixXd& v) const { return at(x)(v); }

private:
  int k_ = 0, n_ = 1, d_ = 1;
  CoefficientFn fn_;
  bool constant_ = false;
  DerivativeFn derivative_;
  Invariance tag_;
};

namespace detail {
inline void check_same_space(const KForm& a, const KForm& b, const char* op) {
  if (a.n() != b.n() || a.d() != b.d())
    throw InvalidArgument(std::string(op) + ": forms live on different spaces");
}

inline Invariance common_tag(const KForm& a, const KForm& b) {
  return a.invariance() == b.invariance() ? a.invariance() : Invariance::none();
}

// A derivative is known if the form is constant or carries one.
inline bool derivative_known(const KForm& f) {
  return f.is_constant() || f.has_analytic_derivative();
}
}  // namespace detail

inline KForm exterior_derivative(const KForm& w, double fd_step = 1e-5);

inline KForm scale(double a, const KForm& w) {
  auto fn = w.coefficient_fn();
  KForm::DerivativeFn der;
  if (w.has_analytic_derivative())
    der = [a, w] { return scale(a, w.analytic_derivative()()); };
  return KForm(w.degree(), w.n(), w.d(), [a, fn](const Eigen::VectorXd& x) { return a * fn(x); },
               w.is_constant(), der, w.invariance());
}

inline KForm add(const KForm& a, const KForm& b) {
  detail::check_same_space(a, b, "add");
  if (a.degree() != b.degree()) throw InvalidArgument("add: degree mismatch");
  auto fa = a.coefficient_fn(), fb = b.coefficient_fn();
  KForm::DerivativeFn der;
  if (detail::derivative_known(a) && detail::derivative_known(b) &&
      !(a.is_constant() && b.is_constant()))
    der = [a, b] { return add(exterior_derivative(a), exterior_derivative(b)); };
  return KForm(a.degree(), a.n(), a.d(),
               [fa, fb](const Eigen::VectorXd& x) { return fa(x) + fb(x); },
               a.is_constant() && b.is_constant(), der, detail::common_tag(a, b));
}

/// Linear combination Σ c_i ω_i.
inline KForm linear_combination(const std::vector<double>& c, const std::vector<KForm>& w) {
  if (w.empty() || c.size() != w.size())
    throw InvalidArgument("linear_combination: need matching non-empty lists");
  KForm out = scale(c[0], w[0]);
  for (std::size_t i = 1; i < w.size(); ++i) out = add(out, scale(c[i], w[i]));
  return out;
}

inline KForm wedge(const KForm& a, const KForm& b) {
  detail::check_same_space(a, b, "wedge");
  if (a.degree() + b.degree() > a.dim())
    throw InvalidArgument("wedge: degree " + std::to_string(a.degree() + b.degree()) +
                          " exceeds dimension " + std::to_string(a.dim()));
  auto fa = a.coefficient_fn(), fb = b.coefficient_fn();
  KForm::DerivativeFn der;
  if (detail::derivative_known(a) && detail::derivative_known(b) &&
      !(a.is_constant() && b.is_constant())) {
    der = [a, b] {
      const double sign = (a.degree() % 2) ? -1.0 : 1.0;
      const int k = a.degree() + b.degree() + 1;
      if (k > a.dim()) return KForm::zero(k, a.n(), a.d());
      return add(wedge(exterior_derivative(a), b), scale(sign, wedge(a, exterior_derivative(b))));
    };
  }
  return KForm(a.degree() + b.degree(), a.n(), a.d(),
               [fa, fb](const Eigen::VectorXd& x) { return wedge(fa(x), fb(x)); },
               a.is_constant() && b.is_constant(), der, detail::common_tag(a, b));
}

/// γ*ω for a single block permutation γ.
inline KForm pullback_by(const KForm& w, const std::vector<int>& sigma) {
  if (static_cast<int>(sigma.size()) != w.d()) throw InvalidArgument("pullback_by: wrong d");
  const auto src = block_source(sigma, w.n());
  auto fn = w.coefficient_fn();
  const int n = w.n(), N = w.dim();
  KForm::DerivativeFn der;
  if (w.has_analytic_derivative())
    der = [w, sigma] { return pullback_by(w.analytic_derivative()(), sigma); };
  return KForm(
      w.degree(), w.n(), w.d(),
      [fn, src, sigma, n, N](const Eigen::VectorXd& x) { return relabel(fn(act(sigma, n, x)), src, N); },
      w.is_constant(), der, w.invariance());
}

/// P_Γ ω = |Γ|^{-1} Σ_γ γ*ω.
inline KForm symmetrize(const KForm& w, const GroupAction& g) {
  if (g.d() != w.d()) throw InvalidArgument("symmetrize: group acts on a different number of blocks");
  auto fn = w.coefficient_fn();
  const int n = w.n(), N = w.dim();
  std::vector<std::pair<std::vector<int>, std::vector<int>>> ops;
  for (const auto& s : g.elements()) ops.emplace_back(s, block_source(s, n));
  const double inv = 1.0 / static_cast<double>(g.order());
  KForm::DerivativeFn der;
  if (w.has_analytic_derivative())
    der = [w, g] { return symmetrize(w.analytic_derivative()(), g); };
  return KForm(
      w.degree(), n, w.d(),
      [fn, ops, inv, n, N, k = w.degree()](const Eigen::VectorXd& x) {
        Covector acc(k, N);
        for (const auto& [s, src] : ops) acc += relabel(fn(act(s, n, x)), src, N);
        return inv * acc;
      },
      w.is_constant(), der, g.tag());
}

/// Pull-back of a form on (R^n)^{d_part} under the projection of
/// (R^n)^{d_total} onto blocks offset, ..., offset + d_part - 1.
inline KForm embed_blocks(const KForm& w, int offset, int d_total) {
  const int n = w.n(), dp = w.d();
  if (offset < 0 || offset + dp > d_total) throw InvalidArgument("embed_blocks: block range");
  const int N = n * d_total;
  std::vector<int> src(n * dp);
  std::iota(src.begin(), src.end(), offset * n);
  auto fn = w.coefficient_fn();
  KForm::DerivativeFn der;
  if (w.has_analytic_derivative())
    der = [w, offset, d_total] { return embed_blocks(w.analytic_derivative()(), offset, d_total); };
  return KForm(
      w.degree(), n, d_total,
      [fn, src, N, offset, n, dp](const Eigen::VectorXd& x) {
        return relabel(fn(x.segment(offset * n, n * dp)), src, N);
      },
      w.is_constant(), der, Invariance::none());
}

/// tr(α) = Σ_j P_j*α for a form α on R^n.
inline KForm trace_form(const KForm& alpha, int d) {
  if (alpha.d() != 1) throw InvalidArgument("trace_form: argument must be a form on R^n (d = 1)");
  if (d < 1) throw InvalidArgument("trace_form: d must be >= 1");
  const int n = alpha.n(), N = n * d;
  auto fn = alpha.coefficient_fn();
  std::vector<std::vector<int>> srcs(d, std::vector<int>(n));
  for (int j = 0; j < d; ++j) std::iota(srcs[j].begin(), srcs[j].end(), j * n);
  KForm::DerivativeFn der;
  if (alpha.has_analytic_derivative())
    der = [alpha, d] { return trace_form(alpha.analytic_derivative()(), d); };
  return KForm(
      alpha.degree(), n, d,
      [fn, srcs, n, N, d, k = alpha.degree()](const Eigen::VectorXd& x) {
        Covector acc(k, N);
        for (int j = 0; j < d; ++j) acc += relabel(fn(x.segment(j * n, n)), srcs[j], N);
        return acc;
      },
      alpha.is_constant(), der, Invariance::full());
}

inline bool is_fully_invariant(const KForm& w) {
  return w.d() == 1 || w.invariance().kind == Invariance::Kind::Full;
}

/// ω_0 ⊗ ω_1 = P_0*ω_0 ∧ P_1*ω_1 on (R^n)^{d_0 + d_1}.
inline KForm tensor_product(const KForm& w0, const KForm& w1) {
  if (w0.n() != w1.n()) throw InvalidArgument("tensor_product: factors have different n");
  const int d = w0.d() + w1.d();
  KForm out = wedge(embed_blocks(w0, 0, d), embed_blocks(w1, w0.d(), d));
  if (is_fully_invariant(w0) && is_fully_invariant(w1))
    out = out.with_invariance(Invariance::split(w0.d(), w1.d()));
  return out;
}

namespace detail {
inline Covector central_difference(const KForm::CoefficientFn& fn, const Eigen::VectorXd& x, int i,
                                   double h) {
  Eigen::VectorXd xp = x, xm = x;
  xp[i] += h;
  xm[i] -= h;
  return (0.5 / h) * (fn(xp) - fn(xm));
}
}  // namespace detail

/// dω. Constant forms give the zero form exactly; an analytic derivative is
/// used when present; otherwise central differences with one Richardson step.
inline KForm exterior_derivative(const KForm& w, double fd_step) {
  const int k = w.degree() + 1;
  if (k > w.dim()) throw InvalidArgument("exterior_derivative: form already has top degree");
  if (w.is_constant()) return KForm::zero(k, w.n(), w.d());
  if (w.has_analytic_derivative()) return w.analytic_derivative()();
  if (!(fd_step > 0)) throw InvalidArgument("exterior_derivative: step must be positive");
  auto fn = w.coefficient_fn();
  const int N = w.dim();
  return KForm(
      k, w.n(), w.d(),
      [fn, N, k, fd_step](const Eigen::VectorXd& x) {
        Covector acc(k, N);
        for (int i = 0; i < N; ++i) {
          const Covector coarse = detail::central_difference(fn, x, i, fd_step);
          const Covector fine = detail::central_difference(fn, x, i, 0.5 * fd_step);
          const Covector rich = (4.0 / 3.0) * fine - (1.0 / 3.0) * coarse;
          acc += wedge(Covector::elementary(N, {i}), rich);
        }
        return acc;
      },
      false, {}, w.invariance());
}

/// Form with polynomial coefficients Σ_I p_I(x) dx_I; its exterior
/// derivative is again polynomial and computed exactly.
inline KForm polynomial_form(int k, int n, int d, const std::map<IndexMask, Polynomial>& terms) {
  const int N = n * d;
  bool constant = true;
  for (const auto& [m, p] : terms) {
    if (std::popcount(m) != k) throw InvalidArgument("polynomial_form: index set of wrong size");
    if (p.nvars() != N) throw InvalidArgument("polynomial_form: polynomial has wrong variable count");
    constant = constant && p.is_constant();
  }
  auto shared = std::make_shared<const std::map<IndexMask, Polynomial>>(terms);
  KForm::DerivativeFn der;
  if (!constant) {
    der = [k, n, d, N, shared] {
      std::map<IndexMask, Polynomial> dt;
      for (const auto& [m, p] : *shared)
        for (int i = 0; i < N; ++i) {
          const IndexMask bit = IndexMask{1} << i;
          if (m & bit) continue;
          Polynomial q = p.derivative(i);
          if (q.is_zero()) continue;
          q *= shuffle_sign(bit, m);
          auto it = dt.try_emplace(bit | m, Polynomial(N)).first;
          it->second += q;
        }
      return polynomial_form(k + 1, n, d, dt);
    };
  }
  return KForm(
      k, n, d,
      [k, N, shared](const Eigen::VectorXd& x) {
        Covector c(k, N);
        for (const auto& [m, p] : *shared) c.add_term(m, p(x));
        return c;
      },
      constant, der);
}

/// vol on R^n as a form with d = 1.
inline KForm volume_form(int n) { return KForm::constant_form(n, 1, Covector::volume(n)); }

/// ω_n = tr(vol_{R^n}) on (R^n)^d.
inline KForm natural_form(int n, int d) { return trace_form(volume_form(n), d); }

inline ComassResult comass(const KForm& w, const Eigen::VectorXd& x, const ComassOptions& opt = {}) {
  return comass(w.at(x), opt);
}

/// |ω_{σx}(σv) - ω_x(v)|, the defect of block-permutation invariance.
inline double invariance_defect(const KForm& w, const std::vector<int>& sigma,
                                const Eigen::VectorXd& x, const Eigen::MatrixXd& v) {
  return std::abs(w(act(sigma, w.n(), x), act(sigma, w.n(), v)) - w(x, v));
}

}  // namespace almqr
