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
#include <complex>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <tuple>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "almqr/almgren.hpp"
#include "almqr/errors.hpp"

namespace almqr {

using Complex = std::complex<double>;

/// When f^{-1}{a < |y| < b} is an affine image {M u + c : inner < |u| < outer}
/// of an annulus, this records the parametrization.
struct AnnulusChart {
  double inner = 0.0, outer = 0.0;
  Matrix M;
  Vector c;
};

/// A proper branched cover f: R^n -> R^n of degree d with exact fiber oracle.
/// The catalog maps are self-maps of R^n, so every y in R^n is in the image.
class BranchedCover {
public:
  virtual ~BranchedCover() = default;

  virtual int n() const = 0;
  virtual int degree() const = 0;
  virtual Vector evaluate(const Vector& x) const = 0;
  virtual Matrix differential(const Vector& x) const = 0;
  /// Fiber f^{-1}(y) with local indices as weights (total weight = degree()).
  virtual AlmgrenPoint preimages(const Vector& y) const = 0;
  virtual int local_index(const Vector& x) const = 0;
  /// Outer and inner distortion: ‖Df‖^n ≤ K_O 𝐉f and 𝐉f ≤ K_I ℓ(Df)^n.
  virtual double K_O() const = 0;
  virtual double K_I() const = 0;
  /// Distance from y to the branch values f(B_f); +inf if B_f is empty.
  virtual double distance_to_branch_values(const Vector& y) const = 0;
  virtual std::string describe() const = 0;
  virtual std::optional<AnnulusChart> annulus_preimage(double, double) const { return std::nullopt; }

  double jacobian(const Vector& x) const { return differential(x).determinant(); }

protected:
  void check_point(const Vector& p, const char* what) const {
    if (p.size() != n())
      throw InvalidArgument(std::string(what) + ": expected a point of dimension " +
                            std::to_string(n()) + ", got " + std::to_string(p.size()));
    if (!p.allFinite()) throw DomainError(std::string(what) + ": point is not finite");
  }
};

using CoverPtr = std::shared_ptr<const BranchedCover>;

inline Vector vec2(double a, double b) { return (Vector(2) << a, b).finished(); }
inline Complex to_complex(const Vector& v) { return {v[0], v[1]}; }
inline Vector from_complex(Complex z) { return vec2(z.real(), z.imag()); }

/// Real 2x2 matrix of multiplication by a complex number.
inline Matrix complex_matrix(Complex a) {
  Matrix m(2, 2);
  m << a.real(), -a.imag(), a.imag(), a.real();
  return m;
}

namespace detail {

// K_O and K_I of a linear map with positive determinant.
inline std::pair<double, double> linear_distortion(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& s = svd.singularValues();
  const double det = a.determinant();
  return {std::pow(s[0], n) / det, det / std::pow(s[n - 1], n)};
}

inline Complex horner(const std::vector<Complex>& c, Complex z) {
  Complex s = 0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * z + *it;
  return s;
}

inline std::vector<Complex> derivative(const std::vector<Complex>& c) {
  std::vector<Complex> d;
  for (std::size_t k = 1; k < c.size(); ++k) d.push_back(static_cast<double>(k) * c[k]);
  return d;
}

// Roots of Σ c_k z^k (leading coefficient nonzero) via companion eigenvalues.
inline std::vector<Complex> companion_roots(const std::vector<Complex>& c) {
  const int d = static_cast<int>(c.size()) - 1;
  if (d < 1) return {};
  Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(d, d);
  for (int i = 1; i < d; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < d; ++i) comp(i, d - 1) = -c[i] / c[d];
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
  if (es.info() != Eigen::Success) throw NumericalError("polynomial roots: eigenvalue solver failed");
  std::vector<Complex> r(es.eigenvalues().data(), es.eigenvalues().data() + d);
  return r;
}

}  // namespace detail

/// Affine map x ↦ A x + b with det A > 0 (degree one).
class AffineCover : public BranchedCover {
public:
  AffineCover(Matrix a, Vector b) : a_(std::move(a)), b_(std::move(b)) {
    if (a_.rows() != a_.cols() || a_.rows() != b_.size() || a_.rows() < 1)
      throw InvalidArgument("affine map: matrix must be square and match the offset");
    if (!(a_.determinant() > 0)) throw InvalidArgument("affine map: determinant must be positive");
    inv_ = a_.inverse();
    std::tie(ko_, ki_) = detail::linear_distortion(a_);
  }
  static std::shared_ptr<AffineCover> identity(int n) {
    return std::make_shared<AffineCover>(Matrix::Identity(n, n), Vector::Zero(n));
  }

  int n() const override { return static_cast<int>(a_.rows()); }
  int degree() const override { return 1; }
  Vector evaluate(const Vector& x) const override {
    check_point(x, "evaluate");
    return a_ * x + b_;
  }
  Matrix differential(const Vector& x) const override {
    check_point(x, "differential");
    return a_;
  }
  AlmgrenPoint preimages(const Vector& y) const override {
    check_point(y, "minv");
    return AlmgrenPoint::from_tuple({Vector(inv_ * (y - b_))});
  }
  int local_index(const Vector& x) const override {
    check_point(x, "local_index");
    return 1;
  }
  double K_O() const override { return ko_; }
  double K_I() const override { return ki_; }
  double distance_to_branch_values(const Vector&) const override {
    return std::numeric_limits<double>::infinity();
  }
  std::string describe() const override { return "affine"; }
  std::optional<AnnulusChart> annulus_preimage(double a, double b) const override {
    return AnnulusChart{a, b, inv_, Vector(-inv_ * b_)};
  }

  const Matrix& matrix() const { return a_; }
  const Vector& offset() const { return b_; }

private:
  Matrix a_, inv_;
  Vector b_;
  double ko_ = 1, ki_ = 1;
};

/// z ↦ Σ c_k z^k on C = R^2 (holomorphic, so K_I = K_O = 1).
class ComplexPolynomial : public BranchedCover {
public:
  explicit ComplexPolynomial(std::vector<Complex> coeffs) : c_(std::move(coeffs)) {
    while (!c_.empty() && c_.back() == Complex(0)) c_.pop_back();
    if (c_.size() < 2) throw InvalidArgument("poly map: degree must be at least 1");
    dc_ = detail::derivative(c_);
    for (const Complex& z : detail::companion_roots(dc_)) critical_values_.push_back(detail::horner(c_, z));
  }

  int n() const override { return 2; }
  int degree() const override { return static_cast<int>(c_.size()) - 1; }
  const std::vector<Complex>& coefficients() const { return c_; }

  Vector evaluate(const Vector& x) const override {
    check_point(x, "evaluate");
    return from_complex(detail::horner(c_, to_complex(x)));
  }
  Matrix differential(const Vector& x) const override {
    check_point(x, "differential");
    return complex_matrix(detail::horner(dc_, to_complex(x)));
  }

  /// Companion eigenvalues of p - w, clustered within 1e-7 (1 + |y|); each
  /// cluster is one location with weight its size. Simple roots are polished
  /// by Newton steps; clusters are replaced by their mean.
  AlmgrenPoint preimages(const Vector& y) const override {
    check_point(y, "minv");
    std::vector<Complex> q = c_;
    q[0] -= to_complex(y);
    std::vector<Complex> roots = detail::companion_roots(q);
    const double radius = 1e-7 * (1.0 + y.norm());
    const int d = degree();
    std::vector<int> label(d, -1);
    int clusters = 0;
    for (int i = 0; i < d; ++i) {
      if (label[i] >= 0) continue;
      label[i] = clusters;
      // Transitive closure within the radius.
      for (bool grew = true; grew;) {
        grew = false;
        for (int j = 0; j < d; ++j) {
          if (label[j] >= 0) continue;
          for (int k = 0; k < d; ++k)
            if (label[k] == clusters && std::abs(roots[j] - roots[k]) <= radius) {
              label[j] = clusters;
              grew = true;
              break;
            }
        }
      }
      ++clusters;
    }
    const std::vector<Complex> dq = detail::derivative(q);
    std::vector<AlmgrenPoint::Entry> entries;
    for (int c = 0; c < clusters; ++c) {
      Complex mean = 0;
      int w = 0;
      for (int i = 0; i < d; ++i)
        if (label[i] == c) {
          mean += roots[i];
          ++w;
        }
      mean /= static_cast<double>(w);
      if (w == 1) {
        for (int it = 0; it < 3; ++it) {
          const Complex der = detail::horner(dq, mean);
          if (der == Complex(0)) break;
          const Complex step = detail::horner(q, mean) / der;
          if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
          mean -= step;
        }
      }
      entries.push_back({from_complex(mean), w});
    }
    return AlmgrenPoint(2, std::move(entries));
  }

  /// Order of vanishing of p - p(x) at x, with a relative tolerance on the
  /// derivatives.
  int local_index(const Vector& x) const override {
    check_point(x, "local_index");
    const Complex z = to_complex(x);
    double scale = 0;
    for (std::size_t k = 0; k < c_.size(); ++k) scale += std::abs(c_[k]) * std::pow(std::abs(z), k);
    std::vector<Complex> der = dc_;
    for (int m = 1; m <= degree(); ++m) {
      if (std::abs(detail::horner(der, z)) > 1e-12 * (1.0 + scale)) return m;
      der = detail::derivative(der);
    }
    return degree();
  }

  double K_O() const override { return 1.0; }
  double K_I() const override { return 1.0; }
  double distance_to_branch_values(const Vector& y) const override {
    double best = std::numeric_limits<double>::infinity();
    for (const Complex& v : critical_values_) best = std::min(best, std::abs(to_complex(y) - v));
    return best;
  }
  std::string describe() const override { return "poly"; }

  std::optional<AnnulusChart> annulus_preimage(double a, double b) const override {
    // Only a monomial c z^d maps annuli onto annuli.
    for (int k = 0; k < degree(); ++k)
      if (c_[k] != Complex(0)) return std::nullopt;
    const double lead = std::abs(c_.back());
    const int d = degree();
    return AnnulusChart{std::pow(a / lead, 1.0 / d), std::pow(b / lead, 1.0 / d),
                        Matrix::Identity(2, 2), Vector::Zero(2)};
  }

private:
  std::vector<Complex> c_, dc_;
  std::vector<Complex> critical_values_;
};

/// z ↦ z^k with explicit k-th roots.
class PlanarPower : public BranchedCover {
public:
  explicit PlanarPower(int k) : k_(k) {
    if (k < 1) throw InvalidArgument("power map: k must be >= 1");
  }
  int n() const override { return 2; }
  int degree() const override { return k_; }
  int k() const { return k_; }

  Vector evaluate(const Vector& x) const override {
    check_point(x, "evaluate");
    return from_complex(std::pow(to_complex(x), k_));
  }
  Matrix differential(const Vector& x) const override {
    check_point(x, "differential");
    return complex_matrix(static_cast<double>(k_) * std::pow(to_complex(x), k_ - 1));
  }
  AlmgrenPoint preimages(const Vector& y) const override {
    check_point(y, "minv");
    const double r = y.norm();
    if (r == 0.0) return AlmgrenPoint::diagonal(Vector::Zero(2), k_);
    const double rho = std::pow(r, 1.0 / k_);
    const double theta = std::atan2(y[1], y[0]);
    std::vector<Vector> xs;
    for (int j = 0; j < k_; ++j) {
      const double phi = (theta + 2.0 * std::numbers::pi * j) / k_;
      xs.push_back(vec2(rho * std::cos(phi), rho * std::sin(phi)));
    }
    return AlmgrenPoint::from_tuple(xs);
  }
  int local_index(const Vector& x) const override {
    check_point(x, "local_index");
    return (x.squaredNorm() == 0.0) ? k_ : 1;
  }
  double K_O() const override { return 1.0; }
  double K_I() const override { return 1.0; }
  double distance_to_branch_values(const Vector& y) const override {
    return k_ == 1 ? std::numeric_limits<double>::infinity() : y.norm();
  }
  std::string describe() const override { return "power"; }
  std::optional<AnnulusChart> annulus_preimage(double a, double b) const override {
    return AnnulusChart{std::pow(a, 1.0 / k_), std::pow(b, 1.0 / k_), Matrix::Identity(2, 2),
                        Vector::Zero(2)};
  }

private:
  int k_;
};

/// (r, θ, z) ↦ (r, kθ, z) on R^3, branched along the z-axis.
class WindingMap3D : public BranchedCover {
public:
  explicit WindingMap3D(int k) : k_(k) {
    if (k < 1) throw InvalidArgument("wind3 map: k must be >= 1");
  }
  int n() const override { return 3; }
  int degree() const override { return k_; }

  Vector evaluate(const Vector& x) const override {
    check_point(x, "evaluate");
    const double r = std::hypot(x[0], x[1]);
    const double t = k_ * std::atan2(x[1], x[0]);
    return (Vector(3) << r * std::cos(t), r * std::sin(t), x[2]).finished();
  }

  /// Df = R(kθ) diag(1, k) R(θ)^T on the horizontal block; at r = 0 the
  /// one-sided value at θ = 0 is returned.
  Matrix differential(const Vector& x) const override {
    check_point(x, "differential");
    const double th = (x[0] == 0.0 && x[1] == 0.0) ? 0.0 : std::atan2(x[1], x[0]);
    const double c1 = std::cos(th), s1 = std::sin(th), ck = std::cos(k_ * th), sk = std::sin(k_ * th);
    Eigen::Matrix2d rk, r1, s;
    rk << ck, -sk, sk, ck;
    r1 << c1, -s1, s1, c1;
    s << 1, 0, 0, k_;
    Matrix m = Matrix::Zero(3, 3);
    m.topLeftCorner(2, 2) = rk * s * r1.transpose();
    m(2, 2) = 1.0;
    return m;
  }

  AlmgrenPoint preimages(const Vector& y) const override {
    check_point(y, "minv");
    const double r = std::hypot(y[0], y[1]);
    if (r == 0.0) return AlmgrenPoint::diagonal(y, k_);
    const double theta = std::atan2(y[1], y[0]);
    std::vector<Vector> xs;
    for (int j = 0; j < k_; ++j) {
      const double phi = (theta + 2.0 * std::numbers::pi * j) / k_;
      xs.push_back((Vector(3) << r * std::cos(phi), r * std::sin(phi), y[2]).finished());
    }
    return AlmgrenPoint::from_tuple(xs);
  }
  int local_index(const Vector& x) const override {
    check_point(x, "local_index");
    return (x[0] == 0.0 && x[1] == 0.0) ? k_ : 1;
  }
  double K_O() const override { return static_cast<double>(k_) * k_; }
  double K_I() const override { return static_cast<double>(k_); }
  double distance_to_branch_values(const Vector& y) const override {
    return k_ == 1 ? std::numeric_limits<double>::infinity() : std::hypot(y[0], y[1]);
  }
  std::string describe() const override { return "wind3"; }

private:
  int k_;
};

/// x ↦ base(A x + b) with det A > 0. The distortion constants are the
/// products of those of A and of the base map; they are sharp when the base
/// map is conformal.
class Precomposed : public BranchedCover {
public:
  Precomposed(Matrix a, Vector b, CoverPtr base)
      : inner_(std::move(a), std::move(b)), base_(std::move(base)) {
    if (!base_) throw InvalidArgument("precompose: base map missing");
    if (inner_.n() != base_->n()) throw InvalidArgument("precompose: affine dimension differs from base");
    inv_ = inner_.matrix().inverse();
  }
  int n() const override { return base_->n(); }
  int degree() const override { return base_->degree(); }
  const BranchedCover& base() const { return *base_; }
  const AffineCover& inner() const { return inner_; }

  Vector evaluate(const Vector& x) const override { return base_->evaluate(inner_.evaluate(x)); }
  Matrix differential(const Vector& x) const override {
    return base_->differential(inner_.evaluate(x)) * inner_.matrix();
  }
  AlmgrenPoint preimages(const Vector& y) const override {
    check_point(y, "minv");
    std::vector<AlmgrenPoint::Entry> e;
    const AlmgrenPoint fiber = base_->preimages(y);
    for (const auto& [u, w] : fiber.entries())
      e.push_back({Vector(inv_ * (u - inner_.offset())), w});
    return AlmgrenPoint(n(), std::move(e));
  }
  int local_index(const Vector& x) const override { return base_->local_index(inner_.evaluate(x)); }
  double K_O() const override { return inner_.K_O() * base_->K_O(); }
  double K_I() const override { return inner_.K_I() * base_->K_I(); }
  double distance_to_branch_values(const Vector& y) const override {
    return base_->distance_to_branch_values(y);
  }
  std::string describe() const override { return "precompose(" + base_->describe() + ")"; }
  std::optional<AnnulusChart> annulus_preimage(double a, double b) const override {
    auto ch = base_->annulus_preimage(a, b);
    if (!ch) return std::nullopt;
    return AnnulusChart{ch->inner, ch->outer, inv_ * ch->M,
                        Vector(inv_ * (ch->c - inner_.offset()))};
  }

private:
  AffineCover inner_;
  CoverPtr base_;
  Matrix inv_;
};

/// minv f(y) = Σ_{x ∈ f^{-1}(y)} ι(f, x) ⟦x⟧.
inline AlmgrenPoint minv(const BranchedCover& f, const Vector& y) { return f.preimages(y); }

/// f_* g(y) = Σ ι(f, x) g(x).
template <class G>
double push_forward(const BranchedCover& f, G&& g, const Vector& y) {
  double s = 0.0;
  const AlmgrenPoint fiber = f.preimages(y);
  for (const auto& [x, w] : fiber.entries()) s += w * g(x);
  return s;
}

/// H(y) = (f_*(‖Df‖^{-2})(y))^{1/2} with the operator norm.
inline double h_function(const BranchedCover& f, const Vector& y) {
  double s = 0.0;
  const AlmgrenPoint fiber = f.preimages(y);
  for (const auto& [x, w] : fiber.entries()) {
    const double nrm = Eigen::JacobiSVD<Matrix>(f.differential(x)).singularValues()[0];
    if (!(nrm > 0)) throw SingularFiberError("H: fiber over y meets a critical point");
    s += w / (nrm * nrm);
  }
  return std::sqrt(s);
}

/// g(y) = Σ ι(f, x) x = d · b(minv f(y)).
inline Vector generalized_inverse(const BranchedCover& f, const Vector& y) {
  Vector s = Vector::Zero(f.n());
  const AlmgrenPoint fiber = f.preimages(y);
  for (const auto& [x, w] : fiber.entries()) s += w * x;
  return s;
}

/// Branch differentials Dg_j(y) = Df(x_j)^{-1} over the expanded fiber
/// (lexicographic order). Throws if the fiber meets the branch set.
inline std::vector<Matrix> inverse_branch_differentials(const BranchedCover& f, const Vector& y) {
  std::vector<Matrix> out;
  for (const Vector& x : expand(f.preimages(y))) {
    const Matrix df = f.differential(x);
    const double det = df.determinant();
    if (!(std::abs(det) > 0) || f.local_index(x) > 1)
      throw SingularFiberError("fiber over y meets the branch set");
    out.push_back(df.inverse());
  }
  return out;
}

/// Metric Jacobian of minv f: sqrt det Σ_j Dg_j^T Dg_j.
inline double inverse_jacobian(const BranchedCover& f, const Vector& y) {
  Matrix gram = Matrix::Zero(f.n(), f.n());
  for (const Matrix& dg : inverse_branch_differentials(f, y)) gram += dg.transpose() * dg;
  return std::sqrt(std::max(0.0, gram.determinant()));
}

/// Frame norm |D minv f|(y) = (Σ_j ‖Dg_j‖^2)^{1/2}.
inline double inverse_frame_norm(const BranchedCover& f, const Vector& y) {
  double s = 0.0;
  for (const Matrix& dg : inverse_branch_differentials(f, y)) {
    const double nrm = Eigen::JacobiSVD<Matrix>(dg).singularValues()[0];
    s += nrm * nrm;
  }
  return std::sqrt(s);
}

}  // namespace almqr
