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

#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "almqr/errors.hpp"
#include "almqr/rng.hpp"

namespace almqr {

/// Index sets {i_1 < ... < i_k} ⊂ {0, ..., N-1} are stored as bitmasks.
using IndexMask = std::uint64_t;

inline constexpr int kMaxCoordinates = 64;

inline IndexMask mask_of(const std::vector<int>& indices) {
  IndexMask m = 0;
  for (int i : indices) {
    if (i < 0 || i >= kMaxCoordinates) throw InvalidArgument("index out of range: " + std::to_string(i));
    const IndexMask bit = IndexMask{1} << i;
    if (m & bit) throw InvalidArgument("repeated index " + std::to_string(i));
    m |= bit;
  }
  return m;
}

inline std::vector<int> indices_of(IndexMask m) {
  std::vector<int> out;
  while (m) {
    out.push_back(std::countr_zero(m));
    m &= m - 1;
  }
  return out;
}

/// Sign of the shuffle that sorts the concatenation (I, J) of two disjoint
/// increasing index lists: (-1)^{#{(i, j) : i in I, j in J, i > j}}.
inline int shuffle_sign(IndexMask a, IndexMask b) {
  int inversions = 0;
  for (IndexMask rest = b; rest; rest &= rest - 1) {
    const int j = std::countr_zero(rest);
    const IndexMask above = j + 1 >= 64 ? 0 : (~IndexMask{0} << (j + 1));
    inversions += std::popcount(a & above);
  }
  return (inversions & 1) ? -1 : 1;
}

/// Sign of the permutation that sorts `v` (assumed to have distinct entries).
inline int sort_sign(std::vector<int> v) {
  int sign = 1;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j)
      if (v[i] > v[j]) sign = -sign;
  return sign;
}

/// A constant k-covector on R^N, stored sparsely over elementary covectors
/// dx_I. Elementary covectors evaluate as determinants:
/// dx_I(v_1, ..., v_k) = det[(v_l)_{i_m}], so dx_1 ∧ dx_2 (e_1, e_2) = 1.
class Covector {
public:
  Covector() = default;
  Covector(int degree, int dim) : k_(degree), N_(dim) {
    if (dim < 1 || dim > kMaxCoordinates)
      throw InvalidArgument("Covector: dimension must be in [1, 64]");
    if (degree < 0 || degree > dim) throw InvalidArgument("Covector: degree out of range");
  }

  static Covector elementary(int dim, const std::vector<int>& indices, double coeff = 1.0) {
    Covector c(static_cast<int>(indices.size()), dim);
    for (int i : indices)
      if (i >= dim) throw InvalidArgument("Covector: index exceeds dimension");
    const int s = sort_sign(indices);
    c.add_term(mask_of(indices), s * coeff);
    return c;
  }

  /// dx_0 ∧ ... ∧ dx_{N-1}.
  static Covector volume(int dim) {
    Covector c(dim, dim);
    c.add_term(dim == 64 ? ~IndexMask{0} : (IndexMask{1} << dim) - 1, 1.0);
    return c;
  }

  int degree() const { return k_; }
  int dim() const { return N_; }
  const std::map<IndexMask, double>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  double coefficient(IndexMask m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? 0.0 : it->second;
  }

  void add_term(IndexMask m, double c) {
    if (std::popcount(m) != k_) throw InvalidArgument("Covector: index set has wrong size");
    if (N_ < 64 && (m >> N_)) throw InvalidArgument("Covector: index exceeds dimension");
    if (c == 0.0) return;
    auto [it, inserted] = terms_.emplace(m, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0.0) terms_.erase(it);
    }
  }

  /// ω(v_1, ..., v_k) with the vectors as the columns of `v` (N x k).
  double operator()(const Eigen::MatrixXd& v) const {
    if (v.rows() != N_ || v.cols() != k_) throw InvalidArgument("Covector: frame has wrong shape");
    if (k_ == 0) return coefficient(0);
    double s = 0.0;
    Eigen::MatrixXd sub(k_, k_);
    for (const auto& [m, c] : terms_) {
      int r = 0;
      for (IndexMask rest = m; rest; rest &= rest - 1) sub.row(r++) = v.row(std::countr_zero(rest));
      s += c * sub.determinant();
    }
    return s;
  }

  Covector& operator+=(const Covector& o) {
    check_same_space(o);
    for (const auto& [m, c] : o.terms_) add_term(m, c);
    return *this;
  }
  Covector& operator*=(double a) {
    if (a == 0.0) {
      terms_.clear();
      return *this;
    }
    for (auto& [m, c] : terms_) c *= a;
    return *this;
  }
  friend Covector operator+(Covector a, const Covector& b) { return a += b; }
  friend Covector operator*(double a, Covector c) { return c *= a; }
  friend Covector operator-(Covector a, const Covector& b) { return a += (-1.0) * b; }

  double max_abs_coefficient() const {
    double m = 0.0;
    for (const auto& [_, c] : terms_) m = std::max(m, std::abs(c));
    return m;
  }

private:
  void check_same_space(const Covector& o) const {
    if (k_ != o.k_ || N_ != o.N_) throw InvalidArgument("Covector: degree or dimension mismatch");
  }

  int k_ = 0;
  int N_ = 1;
  std::map<IndexMask, double> terms_;
};

inline Covector wedge(const Covector& a, const Covector& b) {
  if (a.dim() != b.dim()) throw InvalidArgument("wedge: dimension mismatch");
  if (a.degree() + b.degree() > a.dim())
    throw InvalidArgument("wedge: degree " + std::to_string(a.degree() + b.degree()) +
                          " exceeds dimension " + std::to_string(a.dim()));
  Covector out(a.degree() + b.degree(), a.dim());
  for (const auto& [ma, ca] : a.terms())
    for (const auto& [mb, cb] : b.terms())
      if (!(ma & mb)) out.add_term(ma | mb, shuffle_sign(ma, mb) * ca * cb);
  return out;
}

/// Pull-back under a coordinate map: dx_i ↦ dx_{src[i]} (the covector of
/// v ↦ ω(Pv) where (Pv)_i = v_{src[i]}), into a space of dimension `dim`.
inline Covector relabel(const Covector& c, const std::vector<int>& src, int dim) {
  Covector out(c.degree(), dim);
  std::vector<int> idx;
  for (const auto& [m, coeff] : c.terms()) {
    idx.clear();
    for (IndexMask rest = m; rest; rest &= rest - 1) idx.push_back(src.at(std::countr_zero(rest)));
    out.add_term(mask_of(idx), sort_sign(idx) * coeff);
  }
  return out;
}

/// Pull-back A*ω under a linear map A: R^M -> R^N, so (A*ω)(v) = ω(Av).
inline Covector pullback(const Covector& c, const Eigen::MatrixXd& a) {
  if (a.rows() != c.dim()) throw InvalidArgument("pullback: matrix rows must equal dimension");
  const int M = static_cast<int>(a.cols()), k = c.degree();
  Covector out(k, M);
  if (k > M) return out;
  if (k == 0) {
    out.add_term(0, c.coefficient(0));
    return out;
  }
  // Enumerate k-subsets J of {0..M-1}; coefficient is Σ_I c_I det A[I, J].
  std::vector<int> J(k);
  for (int i = 0; i < k; ++i) J[i] = i;
  Eigen::MatrixXd sub(k, k);
  while (true) {
    double s = 0.0;
    for (const auto& [m, coeff] : c.terms()) {
      int r = 0;
      for (IndexMask rest = m; rest; rest &= rest - 1, ++r)
        for (int col = 0; col < k; ++col) sub(r, col) = a(std::countr_zero(rest), J[col]);
      s += coeff * sub.determinant();
    }
    out.add_term(mask_of(J), s);
    int i = k - 1;
    while (i >= 0 && J[i] == M - k + i) --i;
    if (i < 0) break;
    ++J[i];
    for (int j = i + 1; j < k; ++j) J[j] = J[j - 1] + 1;
  }
  return out;
}

struct ComassOptions {
  int starts = 64;
  int max_iterations = 10000;
  double tolerance = 1e-9;
  std::uint64_t seed = 0;
};

enum class ComassStatus { Exact, Converged, IterationCap };

inline const char* to_string(ComassStatus s) {
  switch (s) {
    case ComassStatus::Exact: return "exact";
    case ComassStatus::Converged: return "converged";
    case ComassStatus::IterationCap: return "iteration_cap";
  }
  return "unknown";
}

/// `value` = ω(frame) for the unit frame reported, hence a certified lower
/// bound for the comass; it is the comass itself when `status` is Exact.
struct ComassResult {
  double value = 0.0;
  Eigen::MatrixXd frame;
  ComassStatus status = ComassStatus::Exact;
};

namespace detail {

// Gradient of F(v) = ω(v_1..v_k) with respect to column l: the covector
// ω(v_1, .., ·, .., v_k), computed by cofactor expansion over each term.
inline Eigen::MatrixXd comass_gradient(const Covector& c, const Eigen::MatrixXd& v) {
  const int N = c.dim(), k = c.degree();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(N, k);
  Eigen::MatrixXd sub(k, k);
  std::vector<int> rows(k);
  for (const auto& [m, coeff] : c.terms()) {
    int r = 0;
    for (IndexMask rest = m; rest; rest &= rest - 1) rows[r++] = std::countr_zero(rest);
    for (int i = 0; i < k; ++i) sub.row(i) = v.row(rows[i]);
    // d det / d sub(i, l) = cofactor(i, l)
    for (int i = 0; i < k; ++i)
      for (int l = 0; l < k; ++l) {
        Eigen::MatrixXd minor(k - 1, k - 1);
        for (int a = 0, ra = 0; a < k; ++a) {
          if (a == i) continue;
          for (int b = 0, cb = 0; b < k; ++b) {
            if (b == l) continue;
            minor(ra, cb++) = sub(a, b);
          }
          ++ra;
        }
        const double cof = (k == 1 ? 1.0 : minor.determinant()) * (((i + l) & 1) ? -1.0 : 1.0);
        g(rows[i], l) += coeff * cof;
      }
  }
  return g;
}

}  // namespace detail

/// max ω(v_1, ..., v_k) over |v_l| ≤ 1. Degrees 0, 1, N-1 and N are solved
/// in closed form. Otherwise candidates are the frames (±e_{i_1}, ..., e_{i_k})
/// of each elementary term and `starts` Sobol-seeded block ascents, each
/// sweep replacing one v_l by its normalized partial gradient.
inline ComassResult comass(const Covector& c, const ComassOptions& opt = {}) {
  const int N = c.dim(), k = c.degree();
  ComassResult res;
  res.frame = Eigen::MatrixXd::Zero(N, k);
  if (c.is_zero()) {
    if (k > 0)
      for (int l = 0; l < k; ++l) res.frame(l, l) = 1.0;
    return res;
  }
  if (k == 0) {
    res.value = std::abs(c.coefficient(0));
    return res;
  }
  if (k == 1 || k == N - 1 || k == N) {
    // Decomposable cases: |ω| equals the Euclidean norm of the coefficients.
    Eigen::VectorXd a = Eigen::VectorXd::Zero(N);
    if (k == 1) {
      for (const auto& [m, coeff] : c.terms()) a[std::countr_zero(m)] = coeff;
      res.frame.col(0) = a.normalized();
    } else if (k == N) {
      res.frame = Eigen::MatrixXd::Identity(N, N);
      if (c.coefficient(c.terms().begin()->first) < 0) res.frame.col(0) *= -1.0;
    } else {
      // ω = ι_a vol for a suitable a; the maximizing frame spans a^⊥.
      for (const auto& [m, coeff] : c.terms()) {
        const IndexMask full = N == 64 ? ~IndexMask{0} : (IndexMask{1} << N) - 1;
        const int missing = std::countr_zero(full & ~m);
        a[missing] = ((missing & 1) ? -1.0 : 1.0) * coeff;
      }
      const Eigen::VectorXd u = a.normalized();
      Eigen::MatrixXd basis(N, N);
      basis.col(0) = u;
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis.leftCols(1));
      Eigen::MatrixXd q = qr.householderQ();
      res.frame = q.rightCols(N - 1);
    }
    res.value = c(res.frame);
    if (res.value < 0 && k >= 1) {
      res.frame.col(0) *= -1.0;
      res.value = -res.value;
    }
    res.status = ComassStatus::Exact;
    return res;
  }

  auto consider = [&](const Eigen::MatrixXd& v) {
    const double val = c(v);
    if (val > res.value) {
      res.value = val;
      res.frame = v;
    }
  };
  for (const auto& [m, coeff] : c.terms()) {
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(N, k);
    int l = 0;
    for (IndexMask rest = m; rest; rest &= rest - 1) v(std::countr_zero(rest), l++) = 1.0;
    if (coeff < 0) v.col(0) *= -1.0;
    consider(v);
  }

  LowDiscrepancy sobol(N * k);
  for (std::uint64_t s = 0; s < opt.seed % 1024; ++s) sobol.next();
  bool all_converged = true;
  for (int start = 0; start < opt.starts; ++start) {
    const auto u = sobol.next();
    Eigen::MatrixXd v(N, k);
    for (int i = 0; i < N * k; ++i) v(i % N, i / N) = 2.0 * u[i] - 1.0;
    for (int l = 0; l < k; ++l) v.col(l).normalize();
    bool converged = false;
    for (int it = 0; it < opt.max_iterations; ++it) {
      // F is linear in each column, so the best unit column given the others
      // is its normalized partial gradient; sweep the columns in turn.
      double tangential = 0.0;
      for (int l = 0; l < k; ++l) {
        const Eigen::VectorXd g = detail::comass_gradient(c, v).col(l);
        tangential = std::max(tangential, (g - g.dot(v.col(l)) * v.col(l)).norm());
        const double gn = g.norm();
        if (gn > 0) v.col(l) = g / gn;
      }
      if (tangential <= opt.tolerance * (1.0 + std::abs(c(v)))) {
        converged = true;
        break;
      }
    }
    all_converged = all_converged && converged;
    consider(v);
  }
  res.status = all_converged ? ComassStatus::Converged : ComassStatus::IterationCap;
  return res;
}

}  // namespace almqr
