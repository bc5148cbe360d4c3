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
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "almqr/errors.hpp"

namespace almqr {

/// Real polynomial in `nvars` variables, stored as exponent vector -> coefficient.
class Polynomial {
public:
  using Exponents = std::vector<int>;

  Polynomial() = default;
  explicit Polynomial(int nvars) : nvars_(nvars) {}

  static Polynomial constant(int nvars, double c) {
    Polynomial p(nvars);
    p.add_term(Exponents(nvars, 0), c);
    return p;
  }

  static Polynomial variable(int nvars, int i, double c = 1.0) {
    Exponents e(nvars, 0);
    e.at(i) = 1;
    Polynomial p(nvars);
    p.add_term(e, c);
    return p;
  }

  int nvars() const { return nvars_; }
  const std::map<Exponents, double>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  bool is_constant() const {
    for (const auto& [e, c] : terms_)
      for (int k : e)
        if (k != 0) return false;
    return true;
  }

  void add_term(const Exponents& e, double c) {
    if (static_cast<int>(e.size()) != nvars_)
      throw InvalidArgument("Polynomial: exponent vector of length " + std::to_string(e.size()) +
                            ", expected " + std::to_string(nvars_));
    for (int k : e)
      if (k < 0) throw InvalidArgument("Polynomial: negative exponent");
    if (c == 0.0) return;
    auto [it, inserted] = terms_.emplace(e, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0.0) terms_.erase(it);
    }
  }

  double operator()(const Eigen::VectorXd& x) const {
    if (x.size() != nvars_) throw InvalidArgument("Polynomial: point has wrong dimension");
    double s = 0.0;
    for (const auto& [e, c] : terms_) {
      double t = c;
      for (int i = 0; i < nvars_; ++i)
        if (e[i]) t *= std::pow(x[i], e[i]);
      s += t;
    }
    return s;
  }

  Polynomial derivative(int i) const {
    Polynomial d(nvars_);
    for (const auto& [e, c] : terms_) {
      if (e.at(i) == 0) continue;
      Exponents f = e;
      f[i] -= 1;
      d.add_term(f, c * e[i]);
    }
    return d;
  }

  Polynomial& operator+=(const Polynomial& o) {
    if (o.nvars_ != nvars_) throw InvalidArgument("Polynomial: variable count mismatch");
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
  }
  Polynomial& operator*=(double a) {
    if (a == 0.0) terms_.clear();
    for (auto& [e, c] : terms_) c *= a;
    return *this;
  }
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator*(double a, Polynomial p) { return p *= a; }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.nvars_ != b.nvars_) throw InvalidArgument("Polynomial: variable count mismatch");
    Polynomial p(a.nvars_);
    for (const auto& [ea, ca] : a.terms_)
      for (const auto& [eb, cb] : b.terms_) {
        Exponents e = ea;
        for (int i = 0; i < a.nvars_; ++i) e[i] += eb[i];
        p.add_term(e, ca * cb);
      }
    return p;
  }

  /// Substitution x_i ↦ x_{src[i]} into a ring with `nvars` variables.
  Polynomial relabel(const std::vector<int>& src, int nvars) const {
    Polynomial p(nvars);
    for (const auto& [e, c] : terms_) {
      Exponents f(nvars, 0);
      for (int i = 0; i < nvars_; ++i) f.at(src.at(i)) += e[i];
      p.add_term(f, c);
    }
    return p;
  }

private:
  int nvars_ = 0;
  std::map<Exponents, double> terms_;
};

}  // namespace almqr
