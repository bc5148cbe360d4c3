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

#include "almqr/almgren.hpp"
#include "test_support.hpp"

using namespace almqr;
using almqr::testing::random_point;
using almqr::testing::random_vector;

namespace {

Vector v1(double a) { return (Vector(1) << a).finished(); }
Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

}  // namespace

TEST(AlmgrenPoint, MergesDuplicatesAndSorts) {
  AlmgrenPoint p = AlmgrenPoint::from_tuple({v1(1), v1(-1), v1(1)});
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p.total_weight(), 3);
  EXPECT_EQ(p.entries()[0].x[0], -1);
  EXPECT_EQ(p.entries()[1].w, 2);
}

TEST(AlmgrenPoint, RejectsBadInput) {
  EXPECT_THROW(AlmgrenPoint(2, {{v1(0), 1}}), InvalidArgument);
  EXPECT_THROW(AlmgrenPoint(1, {{v1(0), 0}}), InvalidArgument);
  EXPECT_THROW(AlmgrenPoint(1, {}), InvalidArgument);
  EXPECT_THROW(AlmgrenPoint(0, {{Vector(0), 1}}), InvalidArgument);
}

TEST(Expand, WeightsAndOrder) {
  auto e = expand(AlmgrenPoint::diagonal(v1(0), 2));
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e[0][0], 0);
  EXPECT_EQ(e[1][0], 0);

  e = expand(AlmgrenPoint::from_tuple({v1(1), v1(-1)}));
  EXPECT_EQ(e[0][0], -1);
  EXPECT_EQ(e[1][0], 1);

  e = expand(AlmgrenPoint::diagonal(v2(0, 0), 3));
  ASSERT_EQ(e.size(), 3u);
  for (const auto& x : e) EXPECT_EQ(x, v2(0, 0));
}

TEST(Distance, SingleValuedIsEuclidean) {
  auto r = distance(AlmgrenPoint::from_tuple({v2(0, 0)}), AlmgrenPoint::from_tuple({v2(3, 4)}));
  EXPECT_DOUBLE_EQ(r.value, 5.0);
}

TEST(Distance, EqualMultisetsAreAtZero) {
  auto r = distance(AlmgrenPoint::from_tuple({v1(0), v1(1)}),
                    AlmgrenPoint::from_tuple({v1(1), v1(0)}));
  EXPECT_EQ(r.value, 0.0);
}

TEST(Distance, BruteForceTwoPairings) {
  // Both pairings of ⟦0,2⟧ with ⟦1,1⟧ cost 1 + 1.
  auto p = AlmgrenPoint::from_tuple({v1(0), v1(2)});
  auto q = AlmgrenPoint::from_tuple({v1(1), v1(1)});
  EXPECT_DOUBLE_EQ(distance_bruteforce(p, q).value, std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(distance(p, q).value, std::sqrt(2.0));
  EXPECT_EQ(distance_bruteforce(p, p).value, 0.0);
}

TEST(Distance, DimensionMismatchThrows) {
  EXPECT_THROW(distance(AlmgrenPoint::from_tuple({v1(0)}), AlmgrenPoint::from_tuple({v2(0, 0)})),
               InvalidArgument);
  EXPECT_THROW(distance(AlmgrenPoint::from_tuple({v1(0)}),
                        AlmgrenPoint::from_tuple({v1(0), v1(1)})),
               InvalidArgument);
}

TEST(Distance, BruteForceGuard) {
  RandomStream rng(1, 0);
  auto p = random_point(rng, 9, 1);
  EXPECT_THROW(distance_bruteforce(p, p), InvalidArgument);
}

TEST(Distance, MatchesExhaustiveSearchD5N3) {
  RandomStream rng(7, 1);
  for (int trial = 0; trial < 200; ++trial) {
    auto p = random_point(rng, 5, 3, 0.0);
    auto q = random_point(rng, 5, 3, 0.0);
    // Independent oracle: explicit minimum over all 120 permutations.
    auto xs = expand(p), ys = expand(q);
    std::vector<int> perm{0, 1, 2, 3, 4};
    double best = 1e300;
    do {
      double s = 0;
      for (int j = 0; j < 5; ++j) s += (xs[j] - ys[perm[j]]).squaredNorm();
      best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    auto r = distance(p, q);
    EXPECT_NEAR(r.value, std::sqrt(best), 1e-12 * (1 + std::sqrt(best)));
    // The reported matching attains the value.
    double s = 0;
    for (int j = 0; j < 5; ++j) s += (xs[j] - ys[r.matching[j]]).squaredNorm();
    EXPECT_NEAR(std::sqrt(s), r.value, 1e-14 * (1 + r.value));
  }
}

TEST(Distance, IdenticalToBruteForceUpToD6) {
  RandomStream rng(11, 2);
  for (int trial = 0; trial < 500; ++trial) {
    const int d = 1 + trial % 6, n = 1 + (trial / 6) % 4;
    auto p = random_point(rng, d, n);
    auto q = random_point(rng, d, n);
    auto fast = distance(p, q);
    auto slow = distance_bruteforce(p, q);
    EXPECT_EQ(fast.value, slow.value);
    EXPECT_EQ(fast.matching, slow.matching);
  }
}

TEST(Distance, MetricAxioms) {
  RandomStream rng(3, 3);
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = 1 + trial % 6, n = 1 + (trial / 7) % 4;
    auto p = random_point(rng, d, n), q = random_point(rng, d, n), r = random_point(rng, d, n);
    const double pq = distance(p, q).value, qp = distance(q, p).value;
    EXPECT_EQ(pq, qp);
    EXPECT_LE(distance(p, r).value, pq + distance(q, r).value + 1e-12);
    EXPECT_EQ(distance(p, p).value, 0.0);
    if (!(p == q)) EXPECT_GT(pq, 0.0);
  }
}

TEST(Distance, TieBreakIsLexicographicallySmallest) {
  // Every pairing of diagonal points has equal cost; identity permutation wins.
  auto p = AlmgrenPoint::diagonal(v2(0, 0), 4);
  auto q = AlmgrenPoint::diagonal(v2(1, 1), 4);
  EXPECT_EQ(distance(p, q).matching, (std::vector<int>{0, 1, 2, 3}));
}

TEST(Barycenter, Basics) {
  Vector a = v2(0.3, -2);
  EXPECT_TRUE(barycenter(AlmgrenPoint::diagonal(a, 4)).isApprox(a));
  EXPECT_EQ(barycenter(AlmgrenPoint::from_tuple({v2(0, 0), v2(2, 0)})), v2(1, 0));
}

TEST(Barycenter, IsInverseSqrtDLipschitz) {
  RandomStream rng(5, 4);
  for (int trial = 0; trial < 2000; ++trial) {
    const int d = 1 + trial % 6, n = 1 + trial % 4;
    auto p = random_point(rng, d, n), q = random_point(rng, d, n);
    const double lhs = (barycenter(p) - barycenter(q)).norm();
    EXPECT_LE(lhs, distance(p, q).value / std::sqrt(double(d)) + 1e-12);
  }
  // Equality on diagonal pairs.
  const int d = 5;
  auto p = AlmgrenPoint::diagonal(v2(1, 2), d), q = AlmgrenPoint::diagonal(v2(-1, 0.5), d);
  EXPECT_NEAR(std::sqrt(double(d)) * (barycenter(p) - barycenter(q)).norm() / distance(p, q).value,
              1.0, 1e-14);
}

TEST(DistanceToDiagonal, Examples) {
  EXPECT_EQ(distance_to_diagonal(AlmgrenPoint::diagonal(v2(4, 5), 3)), 0.0);
  EXPECT_DOUBLE_EQ(distance_to_diagonal(AlmgrenPoint::from_tuple({v1(-1), v1(1)})), std::sqrt(2.0));
}

TEST(DistanceToDiagonal, AgreesWithMetricAndMinimizes) {
  RandomStream rng(9, 5);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 1 + trial % 5, n = 1 + trial % 3;
    auto p = random_point(rng, d, n);
    const double dd = distance_to_diagonal(p);
    const double via_metric = distance(p, AlmgrenPoint::diagonal(barycenter(p), d)).value;
    EXPECT_NEAR(dd * dd, via_metric * via_metric, 1e-12 * (1 + dd * dd));
    for (int k = 0; k < 100; ++k) {
      auto c = AlmgrenPoint::diagonal(barycenter(p) + random_vector(rng, n, 0.5), d);
      EXPECT_LE(dd, distance(p, c).value + 1e-12);
    }
  }
}

TEST(SingularStratum, Examples) {
  EXPECT_EQ(singular_stratum(AlmgrenPoint::from_tuple({v1(1), v1(2), v1(3)}), 0), 1);
  EXPECT_EQ(singular_stratum(AlmgrenPoint::from_tuple({v1(0), v1(0), v1(1)}), 0), 2);
  EXPECT_EQ(singular_stratum(AlmgrenPoint::diagonal(v1(5), 3), 0), 3);
  // Pairwise-within-tol, not transitive closure: 0, 0.6, 1.2 at tol 0.7.
  EXPECT_EQ(singular_stratum(AlmgrenPoint::from_tuple({v1(0), v1(0.6), v1(1.2)}), 0.7), 2);
  EXPECT_THROW(singular_stratum(AlmgrenPoint::diagonal(v1(5), 3), -1), InvalidArgument);
}
