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
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "almqr/assignment.hpp"
#include "almqr/errors.hpp"

namespace almqr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline bool lex_less(const Vector& a, const Vector& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(),
                                      b.data() + b.size());
}

inline bool bitwise_equal(const Vector& a, const Vector& b) {
  return a.size() == b.size() && std::equal(a.data(), a.data() + a.size(), b.data());
}

/// An unordered d-tuple of points in R^n, stored as distinct locations with
/// positive integer multiplicities. Locations are kept in lexicographic
/// order; entries with bitwise-identical locations are merged.
class AlmgrenPoint {
public:
  struct Entry {
    Vector x;
    int w = 1;
  };

  AlmgrenPoint() = default;

  AlmgrenPoint(int ambient_dim, std::vector<Entry> entries) : n_(ambient_dim) {
    if (n_ < 1) throw InvalidArgument("AlmgrenPoint: ambient dimension must be >= 1");
    if (entries.empty()) throw InvalidArgument("AlmgrenPoint: at least one point required");
    for (const auto& e : entries) {
      if (e.x.size() != n_)
        throw InvalidArgument("AlmgrenPoint: location of length " + std::to_string(e.x.size()) +
                              " in ambient dimension " + std::to_string(n_));
      if (e.w < 1) throw InvalidArgument("AlmgrenPoint: weights must be positive");
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Entry& a, const Entry& b) { return lex_less(a.x, b.x); });
    for (auto& e : entries) {
      if (!entries_.empty() && bitwise_equal(entries_.back().x, e.x))
        entries_.back().w += e.w;
      else
        entries_.push_back(std::move(e));
    }
    d_ = 0;
    for (const auto& e : entries_) d_ += e.w;
  }

  /// Tuple constructor ⟦x_1, ..., x_d⟧.
  static AlmgrenPoint from_tuple(const std::vector<Vector>& xs) {
    if (xs.empty()) throw InvalidArgument("AlmgrenPoint: empty tuple");
    std::vector<Entry> e;
    e.reserve(xs.size());
    for (const auto& x : xs) e.push_back({x, 1});
    return AlmgrenPoint(static_cast<int>(xs.front().size()), std::move(e));
  }

  /// d⟦a⟧, a point on the diagonal.
  static AlmgrenPoint diagonal(const Vector& a, int d) {
    return AlmgrenPoint(static_cast<int>(a.size()), {{a, d}});
  }

  int ambient_dim() const { return n_; }
  int total_weight() const { return d_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  bool operator==(const AlmgrenPoint& o) const {
    if (n_ != o.n_ || d_ != o.d_ || entries_.size() != o.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i)
      if (entries_[i].w != o.entries_[i].w || !bitwise_equal(entries_[i].x, o.entries_[i].x))
        return false;
    return true;
  }

private:
  int n_ = 0;
  int d_ = 0;
  std::vector<Entry> entries_;
};

/// Flattens multiplicities: each location repeated `w` times, lexicographic order.
inline std::vector<Vector> expand(const AlmgrenPoint& p) {
  std::vector<Vector> out;
  out.reserve(p.total_weight());
  for (const auto& e : p.entries())
    for (int k = 0; k < e.w; ++k) out.push_back(e.x);
  return out;
}

/// Value of the assignment metric plus a permutation attaining it:
/// expand(p)[j] is paired with expand(q)[matching[j]].
struct DistanceResult {
  double value = 0.0;
  std::vector<int> matching;
};

/// Squared Euclidean distances between two tuples of equal length.
inline Matrix squared_distance_matrix(const std::vector<Vector>& xs, const std::vector<Vector>& ys) {
  const int d = static_cast<int>(xs.size());
  Matrix c(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) c(i, j) = (xs[i] - ys[j]).squaredNorm();
  return c;
}

namespace detail {
inline void check_compatible(const AlmgrenPoint& p, const AlmgrenPoint& q) {
  if (p.ambient_dim() != q.ambient_dim())
    throw InvalidArgument("distance: ambient dimensions differ (" +
                          std::to_string(p.ambient_dim()) + " vs " +
                          std::to_string(q.ambient_dim()) + ")");
  if (p.total_weight() != q.total_weight())
    throw InvalidArgument("distance: total weights differ (" + std::to_string(p.total_weight()) +
                          " vs " + std::to_string(q.total_weight()) + ")");
}
}  // namespace detail

namespace detail {
// Total order on points used to pick one orientation of the assignment
// problem, so that d_A(p, q) and d_A(q, p) are the same floating-point number.
inline bool point_less(const AlmgrenPoint& p, const AlmgrenPoint& q) {
  const auto& a = p.entries();
  const auto& b = q.entries();
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    if (lex_less(a[i].x, b[i].x)) return true;
    if (lex_less(b[i].x, a[i].x)) return false;
    if (a[i].w != b[i].w) return a[i].w > b[i].w;
  }
  return a.size() < b.size();
}

template <class Solver>
DistanceResult oriented_distance(const AlmgrenPoint& p, const AlmgrenPoint& q, Solver solve) {
  check_compatible(p, q);
  const bool swap = point_less(q, p);
  const Assignment a = swap ? solve(squared_distance_matrix(expand(q), expand(p)))
                            : solve(squared_distance_matrix(expand(p), expand(q)));
  DistanceResult r{std::sqrt(std::max(0.0, a.cost)), a.perm};
  if (swap)
    for (std::size_t j = 0; j < a.perm.size(); ++j) r.matching[a.perm[j]] = static_cast<int>(j);
  return r;
}
}  // namespace detail

/// d_A(p, q) = min over permutations of (sum_j |x_j - y_σ(j)|^2)^{1/2},
/// solved as an optimal assignment on squared distances. The assignment is
/// solved with the lexicographically smaller point as the row side, and the
/// matching is the lexicographically smallest optimal one in that
/// orientation (inverted when the arguments come in the other order).
inline DistanceResult distance(const AlmgrenPoint& p, const AlmgrenPoint& q) {
  return detail::oriented_distance(p, q, [](const Matrix& c) { return solve_assignment_lexmin(c); });
}

/// Enumeration of all d! pairings; reference implementation for `distance`.
inline DistanceResult distance_bruteforce(const AlmgrenPoint& p, const AlmgrenPoint& q) {
  return detail::oriented_distance(p, q,
                                   [](const Matrix& c) { return solve_assignment_bruteforce(c); });
}

/// Weighted mean of the locations.
inline Vector barycenter(const AlmgrenPoint& p) {
  Vector b = Vector::Zero(p.ambient_dim());
  for (const auto& e : p.entries()) b += e.w * e.x;
  return b / p.total_weight();
}

/// d_A(p, d⟦b(p)⟧). On the diagonal there is only one pairing, so this is
/// (sum_j |x_j - b(p)|^2)^{1/2}.
inline double distance_to_diagonal(const AlmgrenPoint& p) {
  const Vector b = barycenter(p);
  double s = 0.0;
  for (const auto& e : p.entries()) s += e.w * (e.x - b).squaredNorm();
  return std::sqrt(s);
}

/// Largest k such that some k entries of expand(p) lie pairwise within `tol`.
/// 1 means a regular point, d means (numerically) on the diagonal.
inline int singular_stratum(const AlmgrenPoint& p, double tol) {
  if (tol < 0) throw InvalidArgument("singular_stratum: tol must be nonnegative");
  // Cliques are searched over distinct locations with multiplicity weights.
  const auto& es = p.entries();
  const int m = static_cast<int>(es.size());
  std::vector<std::vector<char>> close(m, std::vector<char>(m, 0));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) close[i][j] = (i == j) || (es[i].x - es[j].x).norm() <= tol;

  int best = 0;
  std::vector<int> clique;
  // Branch and bound over candidates in index order.
  auto grow = [&](auto&& self, int start, int weight) -> void {
    best = std::max(best, weight);
    int remaining = 0;
    for (int k = start; k < m; ++k) remaining += es[k].w;
    if (weight + remaining <= best) return;
    for (int k = start; k < m; ++k) {
      bool ok = true;
      for (int c : clique)
        if (!close[c][k]) {
          ok = false;
          break;
        }
      if (!ok) continue;
      clique.push_back(k);
      self(self, k + 1, weight + es[k].w);
      clique.pop_back();
    }
  };
  grow(grow, 0, 0);
  return best;
}

}  // namespace almqr
