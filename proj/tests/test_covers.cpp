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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "almqr/covers.hpp"
#include "almqr/lifting.hpp"
#include "test_support.hpp"

using namespace almqr;
using almqr::testing::random_vector;

namespace {

constexpr double kPi = std::numbers::pi;

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

std::vector<CoverPtr> catalog() {
  return {
      std::make_shared<PlanarPower>(1),
      std::make_shared<PlanarPower>(2),
      std::make_shared<PlanarPower>(5),
      std::make_shared<ComplexPolynomial>(std::vector<Complex>{{-1, 0}, {0, 0}, {1, 0}}),
      std::make_shared<ComplexPolynomial>(std::vector<Complex>{{0.3, -0.2}, {1, 1}, {0, 0}, {2, 0.5}}),
      std::make_shared<WindingMap3D>(3),
      std::make_shared<Precomposed>(mat2(2, 0.5, 0, 1), vec2(0.1, -0.3), std::make_shared<PlanarPower>(3)),
      std::make_shared<AffineCover>(mat2(1, 2, -1, 1), vec2(0, 1)),
  };
}

double opnorm(const Matrix& m) { return Eigen::JacobiSVD<Matrix>(m).singularValues()[0]; }
double minstretch(const Matrix& m) {
  auto s = Eigen::JacobiSVD<Matrix>(m).singularValues();
  return s[s.size() - 1];
}

}  // namespace

TEST(Minv, SquareExamples) {
  PlanarPower sq(2);
  ComplexPolynomial psq({0, 0, 1});
  for (const BranchedCover* f : {static_cast<const BranchedCover*>(&sq), static_cast<const BranchedCover*>(&psq)}) {
    const auto p = minv(*f, vec2(1, 0));
    ASSERT_EQ(p.size(), 2u);
    EXPECT_NEAR(distance(p, AlmgrenPoint::from_tuple({vec2(1, 0), vec2(-1, 0)})).value, 0.0, 1e-12);
    const auto z = minv(*f, vec2(0, 0));
    ASSERT_EQ(z.size(), 1u);
    EXPECT_EQ(z.entries()[0].w, 2);
    EXPECT_LT(z.entries()[0].x.norm(), 1e-12);
  }
  ComplexPolynomial shifted({-1, 0, 1});
  const auto p = minv(shifted, vec2(0, 0));
  EXPECT_NEAR(distance(p, AlmgrenPoint::from_tuple({vec2(1, 0), vec2(-1, 0)})).value, 0.0, 1e-12);
}

TEST(Minv, MultipleRootClustering) {
  // (z - 1)^2 (z + 2) = z^3 - 3z + 2, fiber over 0 is 2⟦1⟧ + ⟦-2⟧.
  ComplexPolynomial f({2, -3, 0, 1});
  const auto p = minv(f, vec2(0, 0));
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p.total_weight(), 3);
  EXPECT_EQ(p.entries()[0].w, 1);
  EXPECT_NEAR(p.entries()[0].x[0], -2, 1e-9);
  EXPECT_EQ(p.entries()[1].w, 2);
  EXPECT_NEAR(p.entries()[1].x[0], 1, 1e-7);
  EXPECT_EQ(f.local_index(vec2(1, 0)), 2);
  EXPECT_EQ(f.local_index(vec2(-2, 0)), 1);
  EXPECT_NEAR(f.distance_to_branch_values(vec2(0, 1)), 1.0, 1e-9);
}

TEST(Minv, RejectsWrongDimension) {
  PlanarPower sq(2);
  EXPECT_THROW(minv(sq, Vector::Zero(3)), InvalidArgument);
  EXPECT_THROW(minv(sq, vec2(std::nan(""), 0)), DomainError);
}

TEST(LocalIndex, CatalogValues) {
  for (int k = 1; k <= 5; ++k) {
    PlanarPower f(k);
    EXPECT_EQ(f.local_index(vec2(0, 0)), k);
    EXPECT_EQ(f.local_index(vec2(0.3, -1)), 1);
  }
  WindingMap3D w(4);
  EXPECT_EQ(w.local_index((Vector(3) << 0, 0, 2.5).finished()), 4);
  EXPECT_EQ(w.local_index((Vector(3) << 1e-3, 0, 2.5).finished()), 1);
  ComplexPolynomial z4({0, 0, 0, 0, 1});
  EXPECT_EQ(z4.local_index(vec2(0, 0)), 4);
}

TEST(Catalog, FiberInvariants) {
  RandomStream rng(1, 40);
  for (const auto& f : catalog()) {
    for (int s = 0; s < 10000; ++s) {
      const Vector y = random_vector(rng, f->n(), 2.0);
      const auto p = minv(*f, y);
      ASSERT_EQ(p.total_weight(), f->degree()) << f->describe();
      if (s % 10) continue;
      for (const auto& [x, w] : p.entries()) {
        EXPECT_LT((f->evaluate(x) - y).norm(), 1e-9 * (1 + y.norm())) << f->describe();
        if (w == 1) EXPECT_GT(f->jacobian(x), 0.0);
      }
    }
  }
}

TEST(Catalog, DistortionInequalities) {
  RandomStream rng(2, 41);
  for (const auto& f : catalog()) {
    const int n = f->n();
    double sharp_o = 0, sharp_i = 0;
    for (int s = 0; s < 2000; ++s) {
      const Vector x = random_vector(rng, n, 1.5);
      const Matrix df = f->differential(x);
      const double j = df.determinant();
      EXPECT_LE(std::pow(opnorm(df), n), f->K_O() * j * (1 + 1e-10)) << f->describe();
      EXPECT_LE(j, f->K_I() * std::pow(minstretch(df), n) * (1 + 1e-10)) << f->describe();
      sharp_o = std::max(sharp_o, std::pow(opnorm(df), n) / j);
      sharp_i = std::max(sharp_i, j / std::pow(minstretch(df), n));
    }
    // Constants are attained for these maps (conformal base or exact winding).
    EXPECT_NEAR(sharp_o, f->K_O(), 1e-8 * f->K_O()) << f->describe();
    EXPECT_NEAR(sharp_i, f->K_I(), 1e-8 * f->K_I()) << f->describe();
  }
}

TEST(Catalog, ConformalPolynomialHasUnitDistortion) {
  ComplexPolynomial f({{0.3, -0.2}, {1, 1}, {0, 0}, {2, 0.5}});
  RandomStream rng(3, 42);
  for (int s = 0; s < 1000; ++s) {
    const Matrix df = f.differential(random_vector(rng, 2));
    EXPECT_NEAR(opnorm(df) * opnorm(df), df.determinant(), 1e-10 * (1 + df.determinant()));
  }
}

TEST(Catalog, DifferentialsMatchFiniteDifferences) {
  RandomStream rng(4, 43);
  const double h = 1e-6;
  for (const auto& f : catalog()) {
    for (int s = 0; s < 50; ++s) {
      const Vector x = random_vector(rng, f->n());
      Matrix fd(f->n(), f->n());
      for (int i = 0; i < f->n(); ++i) {
        Vector e = Vector::Zero(f->n());
        e[i] = h;
        fd.col(i) = (f->evaluate(x + e) - f->evaluate(x - e)) / (2 * h);
      }
      EXPECT_LT((fd - f->differential(x)).norm(), 1e-6 * (1 + fd.norm())) << f->describe();
    }
  }
}

TEST(PushForward, Examples) {
  RandomStream rng(5, 44);
  PlanarPower sq(2);
  for (const auto& f : catalog()) {
    const Vector y = random_vector(rng, f->n());
    EXPECT_DOUBLE_EQ(push_forward(*f, [](const Vector&) { return 1.0; }, y), f->degree());
    EXPECT_GE(push_forward(*f, [](const Vector& x) { return x.squaredNorm(); }, y), 0.0);
  }
  for (int s = 0; s < 100; ++s) {
    const Vector y = random_vector(rng, 2);
    EXPECT_NEAR(push_forward(sq, [](const Vector& x) { return x.squaredNorm(); }, y), 2 * y.norm(),
                1e-12 * (1 + y.norm()));
  }
}

TEST(HFunction, Examples) {
  PlanarPower sq(2);
  EXPECT_NEAR(h_function(sq, vec2(std::cos(0.7), std::sin(0.7))), 1 / std::sqrt(2.0), 1e-14);
  for (int d = 2; d <= 5; ++d) {
    PlanarPower f(d);
    for (double r : {0.1, 1.0, 3.0}) {
      const double expected = std::pow(r, -2.0 * (d - 1) / d) / d;
      const double h = h_function(f, vec2(r * std::cos(1.1), r * std::sin(1.1)));
      EXPECT_NEAR(h * h, expected, 1e-12 * expected);
    }
  }
  EXPECT_DOUBLE_EQ(h_function(PlanarPower(1), vec2(3, 4)), 1.0);
  EXPECT_THROW(h_function(sq, vec2(0, 0)), SingularFiberError);
}

TEST(GeneralizedInverse, PowerMapsSumToZeroAndMatchBarycenter) {
  RandomStream rng(6, 45);
  for (const auto& f : catalog()) {
    for (int s = 0; s < 100; ++s) {
      const Vector y = random_vector(rng, f->n());
      const Vector g = generalized_inverse(*f, y);
      EXPECT_LT((g - f->degree() * barycenter(minv(*f, y))).norm(), 1e-12 * (1 + g.norm()));
    }
  }
  for (int d = 2; d <= 6; ++d) {
    PlanarPower f(d);
    for (int s = 0; s < 100; ++s) EXPECT_LT(generalized_inverse(f, random_vector(rng, 2)).norm(), 1e-12);
  }
}

TEST(MinvContinuity, ShrinkingRadii) {
  RandomStream rng(7, 46);
  PlanarPower f(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector y = random_vector(rng, 2);
    const Vector dir = random_vector(rng, 2).normalized();
    const auto p = minv(f, y);
    double last = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 20; ++k) {
      const double r = 0.5 * std::pow(0.6, k) * y.norm();
      const double dist = distance(minv(f, y + r * dir), p).value;
      EXPECT_LE(dist, last * (1 + 1e-9));
      last = dist;
      // Each branch maps B(y, r) onto the normal neighbourhood U_f(x, r);
      // sample its boundary image to get the diameter.
      double diam_max = 0;
      for (const auto& [x, w] : p.entries()) {
        std::vector<Vector> bd;
        for (int s = 0; s < 720; ++s) {
          const Vector yb = y + r * (1 + 1e-9) * vec2(std::cos(2 * kPi * s / 720), std::sin(2 * kPi * s / 720));
          const auto fib = expand(minv(f, yb));
          bd.push_back(*std::min_element(fib.begin(), fib.end(), [&](const Vector& a, const Vector& b) {
            return (a - x).norm() < (b - x).norm();
          }));
        }
        for (std::size_t a = 0; a < bd.size(); ++a)
          for (std::size_t b = a + 1; b < bd.size(); b += 7) diam_max = std::max(diam_max, (bd[a] - bd[b]).norm());
      }
      EXPECT_LE(dist * dist, f.degree() * diam_max * diam_max);
    }
    EXPECT_LT(last, 1e-4);
  }
}

TEST(Pseudomonotone, PowerMapBallImages) {
  RandomStream rng(8, 47);
  for (int k : {2, 3}) {
    PlanarPower f(k);
    for (int trial = 0; trial < 10; ++trial) {
      const Vector y = random_vector(rng, 2);
      const double r = rng.uniform(0.05, 1.5);
      std::vector<AlmgrenPoint> inside, boundary;
      for (int s = 0; s < 200; ++s) {
        const double a = 2 * kPi * s / 200;
        boundary.push_back(minv(f, y + r * vec2(std::cos(a), std::sin(a))));
      }
      for (int s = 0; s < 200; ++s) {
        Vector u;
        do u = vec2(rng.uniform(-1, 1), rng.uniform(-1, 1));
        while (u.norm() > 1);
        inside.push_back(minv(f, y + r * u));
      }
      inside.insert(inside.end(), boundary.begin(), boundary.end());
      auto diam = [](const std::vector<AlmgrenPoint>& ps) {
        double m = 0;
        for (std::size_t a = 0; a < ps.size(); ++a)
          for (std::size_t b = a + 1; b < ps.size(); ++b) m = std::max(m, distance(ps[a], ps[b]).value);
        return m;
      };
      EXPECT_LE(diam(inside), std::sqrt(double(k)) * diam(boundary) + 1e-9);
    }
  }
}

TEST(InverseJacobian, ConformalEqualsHToTheN) {
  RandomStream rng(9, 48);
  for (int k = 1; k <= 4; ++k) {
    PlanarPower f(k);
    for (int s = 0; s < 100; ++s) {
      const Vector y = random_vector(rng, 2);
      const double h = h_function(f, y);
      EXPECT_NEAR(inverse_jacobian(f, y), h * h, 1e-10 * h * h);
      EXPECT_NEAR(inverse_frame_norm(f, y), h, 1e-12 * h);
    }
  }
}

TEST(LiftPath, MonodromyOfSquareAroundUnitCircle) {
  PlanarPower f(2);
  auto gamma = [](double t) { return vec2(std::cos(2 * kPi * t), std::sin(2 * kPi * t)); };
  const auto lp = lift_path(f, gamma);
  EXPECT_TRUE(lp.closed_with_swap());
  EXPECT_EQ(lp.monodromy, (std::vector<int>{1, 0}));
  // Explicit lifts ±e^{πit}.
  for (std::size_t s = 0; s < lp.ts.size(); ++s) {
    const double t = lp.ts[s];
    const Vector a = vec2(std::cos(kPi * t), std::sin(kPi * t));
    const double e0 = std::min((lp.lifts[0][s] - a).norm(), (lp.lifts[0][s] + a).norm());
    EXPECT_LT(e0, 1e-12);
    EXPECT_LT((lp.lifts[0][s] + lp.lifts[1][s]).norm(), 1e-12);
    // Continuity: lift 0 stays on the same branch as at t = 0.
    const Vector branch = lp.lifts[0][0][0] > 0 ? a : Vector(-a);
    EXPECT_LT((lp.lifts[0][s] - branch).norm(), 1e-12);
  }
  EXPECT_LT(distance(minv(f, gamma(1.0)), minv(f, gamma(0.0))).value, 1e-12);
}

TEST(LiftPath, FiberMultisetAtEverySample) {
  PlanarPower f(3);
  auto gamma = [](double t) { return vec2(0.5 + std::cos(6 * t), 0.3 * std::sin(9 * t) + 0.1); };
  const auto lp = lift_path(f, gamma);
  for (std::size_t s = 0; s < lp.ts.size(); ++s) {
    std::vector<Vector> xs;
    for (int j = 0; j < 3; ++j) xs.push_back(lp.lifts[j][s]);
    EXPECT_LT(distance(AlmgrenPoint::from_tuple(xs), minv(f, gamma(lp.ts[s]))).value, 1e-12);
    for (int j = 0; j < 3; ++j) EXPECT_LT((f.evaluate(lp.lifts[j][s]) - gamma(lp.ts[s])).norm(), 1e-12);
  }
}

TEST(LiftPath, IdentityAndConstantPaths) {
  PlanarPower id(1);
  auto gamma = [](double t) { return vec2(t * t, std::sin(3 * t)); };
  const auto lp = lift_path(id, gamma);
  for (std::size_t s = 0; s < lp.ts.size(); ++s) EXPECT_LT((lp.lifts[0][s] - gamma(lp.ts[s])).norm(), 1e-15);

  PlanarPower f(4);
  const Vector y0 = vec2(0.2, -0.7);
  const auto c = lift_path(f, [&](double) { return y0; });
  for (int j = 0; j < 4; ++j)
    for (std::size_t s = 0; s < c.ts.size(); ++s) EXPECT_EQ(c.lifts[j][s], c.lifts[j][0]);
  EXPECT_FALSE(c.closed_with_swap());
}

TEST(LiftPath, ThroughBranchValue) {
  // The segment from -1 to 1 passes through the branch value 0 of z^2.
  PlanarPower f(2);
  const auto lp = lift_path(f, [](double t) { return vec2(2 * t - 1, 0); });
  EXPECT_FALSE(lp.branch_passages.empty());
  for (std::size_t s = 0; s < lp.ts.size(); ++s) {
    std::vector<Vector> xs{lp.lifts[0][s], lp.lifts[1][s]};
    EXPECT_LT(distance(AlmgrenPoint::from_tuple(xs), minv(f, vec2(2 * lp.ts[s] - 1, 0))).value, 1e-12);
  }
}

TEST(LiftPath, Winding3DLoop) {
  WindingMap3D f(3);
  auto gamma = [](double t) {
    return (Vector(3) << std::cos(2 * kPi * t), std::sin(2 * kPi * t), 0.5 * t * (1 - t)).finished();
  };
  const auto lp = lift_path(f, gamma);
  // Going once around the axis advances each lift by one sheet.
  std::vector<int> sorted = lp.monodromy;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, (std::vector<int>{0, 1, 2}));
  for (int j = 0; j < 3; ++j) EXPECT_NE(lp.monodromy[j], j);
}
