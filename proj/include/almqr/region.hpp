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
#include <string>

#include <Eigen/Dense>

#include "almqr/errors.hpp"
#include "almqr/rng.hpp"

namespace almqr {

/// Simple domains in R^m: an axis box, a ball, or a planar-style annulus
/// {inner < |x - center| < outer}.
class Region {
public:
  enum class Kind { Box, Ball, Annulus };

  static Region box(Eigen::VectorXd lo, Eigen::VectorXd hi) {
    if (lo.size() != hi.size() || lo.size() == 0) throw InvalidArgument("Region: box bounds mismatch");
    if (((hi - lo).array() <= 0).any()) throw InvalidArgument("Region: empty box");
    Region r;
    r.kind_ = Kind::Box;
    r.lo_ = std::move(lo);
    r.hi_ = std::move(hi);
    return r;
  }

  static Region ball(Eigen::VectorXd center, double radius) {
    if (!(radius > 0)) throw InvalidArgument("Region: ball radius must be positive");
    Region r;
    r.kind_ = Kind::Ball;
    r.center_ = std::move(center);
    r.outer_ = radius;
    return r;
  }

  static Region annulus(Eigen::VectorXd center, double inner, double outer) {
    if (!(inner >= 0 && outer > inner)) throw InvalidArgument("Region: annulus needs 0 <= inner < outer");
    Region r;
    r.kind_ = Kind::Annulus;
    r.center_ = std::move(center);
    r.inner_ = inner;
    r.outer_ = outer;
    return r;
  }

  Kind kind() const { return kind_; }
  int dim() const { return static_cast<int>(kind_ == Kind::Box ? lo_.size() : center_.size()); }
  const Eigen::VectorXd& center() const { return center_; }
  double inner() const { return inner_; }
  double outer() const { return outer_; }

  bool contains(const Eigen::VectorXd& x) const {
    if (x.size() != dim()) return false;
    switch (kind_) {
      case Kind::Box: return ((x - lo_).array() >= 0).all() && ((hi_ - x).array() >= 0).all();
      case Kind::Ball: return (x - center_).norm() <= outer_;
      case Kind::Annulus: {
        const double r = (x - center_).norm();
        return r >= inner_ && r <= outer_;
      }
    }
    return false;
  }

  /// Distance from x to the complement; nonpositive outside.
  double margin(const Eigen::VectorXd& x) const {
    switch (kind_) {
      case Kind::Box: return std::min((x - lo_).minCoeff(), (hi_ - x).minCoeff());
      case Kind::Ball: return outer_ - (x - center_).norm();
      case Kind::Annulus: {
        const double r = (x - center_).norm();
        return std::min(r - inner_, outer_ - r);
      }
    }
    return 0.0;
  }

  Eigen::VectorXd lower() const {
    return kind_ == Kind::Box ? lo_ : Eigen::VectorXd(center_.array() - outer_);
  }
  Eigen::VectorXd upper() const {
    return kind_ == Kind::Box ? hi_ : Eigen::VectorXd(center_.array() + outer_);
  }

  double diameter() const {
    return kind_ == Kind::Box ? (hi_ - lo_).norm() : 2.0 * outer_;
  }

  /// Uniform sample by rejection from the bounding box.
  Eigen::VectorXd sample(RandomStream& rng) const {
    const Eigen::VectorXd lo = lower(), hi = upper();
    Eigen::VectorXd x(lo.size());
    for (int attempt = 0; attempt < 100000; ++attempt) {
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.uniform(lo[i], hi[i]);
      if (contains(x)) return x;
    }
    throw NumericalError("Region: rejection sampling failed");
  }

  std::string describe() const {
    switch (kind_) {
      case Kind::Box: return "box";
      case Kind::Ball: return "ball";
      case Kind::Annulus: return "annulus";
    }
    return "region";
  }

private:
  Region() = default;
  Kind kind_ = Kind::Box;
  Eigen::VectorXd lo_, hi_, center_;
  double inner_ = 0.0, outer_ = 0.0;
};

}  // namespace almqr
