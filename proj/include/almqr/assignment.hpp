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
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "almqr/errors.hpp"

namespace almqr {

/// A perfect matching of a square cost matrix: row i is assigned column
/// `perm[i]`. `cost` is the sum of the matched entries, accumulated in row order.
struct Assignment {
  std::vector<int> perm;
  double cost = 0.0;
};

namespace detail {

// Shortest augmenting path (Jonker-Volgenant style potentials). Rows and
// columns are the index lists `rows`/`cols` into `c`, which must have equal
// length. Returns the optimal cost; `out[r]` is the position in `cols`
// assigned to the r-th row.
inline double hungarian_subset(const Eigen::MatrixXd& c, const std::vector<int>& rows,
                               const std::vector<int>& cols, std::vector<int>& out) {
  const int n = static_cast<int>(rows.size());
  out.assign(n, -1);
  if (n == 0) return 0.0;
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = c(rows[i0 - 1], cols[j - 1]) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (int j = 1; j <= n; ++j)
    if (p[j] != 0) out[p[j] - 1] = j - 1;
  double total = 0.0;
  for (int r = 0; r < n; ++r) total += c(rows[r], cols[out[r]]);
  return total;
}

inline double optimality_band(double opt) { return 1e-12 * (1.0 + std::abs(opt)); }

inline double row_order_cost(const Eigen::MatrixXd& c, const std::vector<int>& perm) {
  double s = 0.0;
  for (std::size_t i = 0; i < perm.size(); ++i) s += c(static_cast<int>(i), perm[i]);
  return s;
}

}  // namespace detail

/// Optimal assignment (minimum total cost) without tie-breaking guarantees.
inline Assignment solve_assignment(const Eigen::MatrixXd& cost) {
  if (cost.rows() != cost.cols()) throw InvalidArgument("assignment: cost matrix must be square");
  const int n = static_cast<int>(cost.rows());
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Assignment a;
  detail::hungarian_subset(cost, idx, idx, a.perm);
  a.cost = detail::row_order_cost(cost, a.perm);
  return a;
}

/// Optimal assignment whose permutation is lexicographically smallest among
/// all assignments within a relative band of 1e-12 of the optimum.
/// Cost O(n^5); intended for the small n of topological degrees.
inline Assignment solve_assignment_lexmin(const Eigen::MatrixXd& cost) {
  if (cost.rows() != cost.cols()) throw InvalidArgument("assignment: cost matrix must be square");
  const int n = static_cast<int>(cost.rows());
  const Assignment best = solve_assignment(cost);
  const double limit = best.cost + detail::optimality_band(best.cost);

  Assignment a;
  a.perm.assign(n, -1);
  std::vector<char> taken(n, 0);
  double partial = 0.0;
  std::vector<int> rows, cols, sub;
  for (int i = 0; i < n; ++i) {
    bool fixed = false;
    for (int j = 0; j < n && !fixed; ++j) {
      if (taken[j]) continue;
      rows.clear();
      cols.clear();
      for (int r = i + 1; r < n; ++r) rows.push_back(r);
      for (int col = 0; col < n; ++col)
        if (!taken[col] && col != j) cols.push_back(col);
      const double rest = detail::hungarian_subset(cost, rows, cols, sub);
      if (partial + cost(i, j) + rest <= limit) {
        a.perm[i] = j;
        taken[j] = 1;
        partial += cost(i, j);
        fixed = true;
      }
    }
    if (!fixed) {
      // Only reachable through floating-point pathologies; fall back to the
      // unrefined optimum.
      return best;
    }
  }
  a.cost = detail::row_order_cost(cost, a.perm);
  return a;
}

/// Exhaustive search over all n! permutations, lexicographic order, with the
/// same near-optimal band and tie-break as solve_assignment_lexmin.
inline Assignment solve_assignment_bruteforce(const Eigen::MatrixXd& cost, int max_n = 8) {
  if (cost.rows() != cost.cols()) throw InvalidArgument("assignment: cost matrix must be square");
  const int n = static_cast<int>(cost.rows());
  if (n > max_n)
    throw InvalidArgument("assignment: brute force limited to n <= " + std::to_string(max_n));
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double minimum = std::numeric_limits<double>::infinity();
  do {
    minimum = std::min(minimum, detail::row_order_cost(cost, perm));
  } while (std::next_permutation(perm.begin(), perm.end()));
  const double limit = minimum + detail::optimality_band(minimum);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    const double s = detail::row_order_cost(cost, perm);
    if (s <= limit) return Assignment{perm, s};
  } while (std::next_permutation(perm.begin(), perm.end()));
  return Assignment{perm, minimum};  // unreachable
}

}  // namespace almqr
