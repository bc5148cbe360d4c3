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
#include <numbers>
#include <optional>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "almqr/errors.hpp"

namespace almqr {

struct GaussRule {
  std::vector<double> nodes, weights;  // on [-1, 1]
};

/// Gauss-Legendre rule by Golub-Welsch: nodes are eigenvalues of the Jacobi
/// matrix, weights 2 v_0^2 from the first eigenvector components.
inline GaussRule gauss_legendre(int order) {
  if (order < 1) throw InvalidArgument("gauss_legendre: order must be >= 1");
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    j(k, k - 1) = j(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  if (es.info() != Eigen::Success) throw NumericalError("gauss_legendre: eigen solver failed");
  GaussRule r;
  for (int k = 0; k < order; ++k) {
    r.nodes.push_back(es.eigenvalues()[k]);
    const double v = es.eigenvectors()(0, k);
    r.weights.push_back(2.0 * v * v);
  }
  return r;
}

/// Tensor-product Gauss-Legendre over the box [lo, hi] in R^m. The integrand
/// may return a double or a fixed-size Eigen vector.
template <class F>
auto integrate_box(F&& f, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, int order) {
  using R = std::decay_t<std::invoke_result_t<F&, const Eigen::VectorXd&>>;
  const int m = static_cast<int>(lo.size());
  const GaussRule g = gauss_legendre(order);
  const Eigen::VectorXd half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
  double jac = 1.0;
  for (int i = 0; i < m; ++i) jac *= half[i];
  std::vector<int> idx(m, 0);
  Eigen::VectorXd x(m);
  std::optional<R> sum;
  while (true) {
    double w = 1.0;
    for (int i = 0; i < m; ++i) {
      x[i] = mid[i] + half[i] * g.nodes[idx[i]];
      w *= g.weights[idx[i]];
    }
    const R v = f(static_cast<const Eigen::VectorXd&>(x));
    if (sum) *sum += w * v;
    else sum = R(w * v);
    int i = 0;
    while (i < m && ++idx[i] == order) idx[i++] = 0;
    if (i == m) break;
  }
  return R(jac * *sum);
}

/// ∫ over the planar annulus {inner < |u| < outer}, polar coordinates with
/// Gauss-Legendre in r and the periodic trapezoid rule in θ.
template <class F>
double integrate_annulus(F&& f, double inner, double outer, int radial_order, int angular_points) {
  const GaussRule g = gauss_legendre(radial_order);
  const double half = 0.5 * (outer - inner), mid = 0.5 * (outer + inner);
  const double dth = 2.0 * std::numbers::pi / angular_points;
  double sum = 0.0;
  Eigen::VectorXd u(2);
  for (int k = 0; k < radial_order; ++k) {
    const double r = mid + half * g.nodes[k];
    double ring = 0.0;
    for (int a = 0; a < angular_points; ++a) {
      const double th = (a + 0.5) * dth;
      u << r * std::cos(th), r * std::sin(th);
      ring += f(static_cast<const Eigen::VectorXd&>(u));
    }
    sum += g.weights[k] * r * ring * dth;
  }
  return half * sum;
}

}  // namespace almqr
