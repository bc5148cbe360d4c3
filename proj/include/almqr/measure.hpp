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
#include <vector>

#include "almqr/almgren.hpp"
#include "almqr/covers.hpp"
#include "almqr/report.hpp"
#include "almqr/rng.hpp"

namespace almqr {

/// Volume of the unit ball in R^n.
inline double unit_ball_volume(int n) {
  return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

namespace detail {

// Uniform mixture over the balls B(z_k, r) around the distinct entries of z.
// Every x with minv f(f(x)) ∈ B_A(z, r) lies in one of these balls, since the
// optimal matching pairs x with some z_k at distance < r.
class FiberBallSampler {
public:
  FiberBallSampler(const AlmgrenPoint& z, double r) : r_(r), n_(z.ambient_dim()) {
    for (const auto& e : z.entries()) centers_.push_back(e.x);
    vol_ = unit_ball_volume(n_) * std::pow(r, n_);
  }

  Vector draw(RandomStream& rng) const {
    const Vector& c = centers_[rng.integer(0, static_cast<int>(centers_.size()) - 1)];
    Vector u(n_);
    for (int i = 0; i < n_; ++i) u[i] = rng.normal();
    return c + r_ * std::pow(rng.uniform(), 1.0 / n_) * u.normalized();
  }

  /// Sampling density at x.
  double density(const Vector& x) const {
    int hits = 0;
    for (const Vector& c : centers_) hits += (x - c).norm() < r_;
    return hits / (centers_.size() * vol_);
  }

private:
  double r_;
  int n_;
  std::vector<Vector> centers_;
  double vol_;
};

// Paired per-sample contributions for ∫ 1_E(minv f(y)) 𝐉 minv f(y) dy (b)
// and |(minv f ∘ f)^{-1} E| (a), both importance sampled through x.
struct MeasureSamples {
  Summary a, b;
  double sum_ab = 0.0, sum_aa = 0.0, sum_bb = 0.0;
  long hits = 0, excluded = 0, n = 0;

  void add(double va, double vb) {
    a.add(va);
    b.add(vb);
    sum_ab += va * vb;
    sum_aa += va * va;
    sum_bb += vb * vb;
    ++n;
  }
  static double sigma_of_mean(double sum, double sum_sq, long n) {
    if (n < 2) return 0.0;
    const double mean = sum / n;
    return std::sqrt(std::max(0.0, (sum_sq / n - mean * mean) / (n - 1)));
  }
  double sigma_a() const { return sigma_of_mean(a.sum, sum_aa, n); }
  double sigma_b() const { return sigma_of_mean(b.sum, sum_bb, n); }
  // Delta-method standard error of mean(a) / mean(b).
  double sigma_ratio() const {
    const double ma = a.mean(), mb = b.mean();
    if (n < 2 || mb == 0) return 0.0;
    const double R = ma / mb;
    const double vaa = sum_aa / n - ma * ma, vbb = sum_bb / n - mb * mb, vab = sum_ab / n - ma * mb;
    return std::sqrt(std::max(0.0, (vaa - 2 * R * vab + R * R * vbb) / (n - 1))) / std::abs(mb);
  }
};

inline MeasureSamples sample_fiber_ball(const BranchedCover& f, const AlmgrenPoint& z, double r, long N,
                                        std::uint64_t seed) {
  if (z.ambient_dim() != f.n() || z.total_weight() != f.degree())
    throw InvalidArgument("ball center must be a point of A_d(R^n) with the cover's d and n");
  if (!(r > 0) || N < 1) throw InvalidArgument("ball sampling: need r > 0 and N >= 1");
  const FiberBallSampler sampler(z, r);
  MeasureSamples out;
  for (long i = 0; i < N; ++i) {
    RandomStream rng(seed, static_cast<std::uint64_t>(i));
    const Vector x = sampler.draw(rng);
    const Vector y = f.evaluate(x);
    const AlmgrenPoint p = f.preimages(y);
    if (!(distance(p, z).value < r)) {
      out.add(0.0, 0.0);
      continue;
    }
    double push = 0.0, jac = 0.0;
    try {
      for (const Vector& xp : expand(p)) push += sampler.density(xp) / std::abs(f.jacobian(xp));
      jac = inverse_jacobian(f, y);
    } catch (const SingularFiberError&) {
      ++out.excluded;
      out.add(0.0, 0.0);
      continue;
    }
    if (!(push > 0) || !std::isfinite(jac)) {
      ++out.excluded;
      out.add(0.0, 0.0);
      continue;
    }
    ++out.hits;
    out.add(1.0 / sampler.density(x), jac / push);
  }
  return out;
}

}  // namespace detail

/// Estimate of H^n(B_{Ω_f}(z, r)) against ω_n d^{n/2} K_I K_O r^n.
struct OmegaFSample {
  AlmgrenPoint center;
  double radius = 0.0;
  double measure = 0.0;
  double sigma = 0.0;       // standard error of `measure`
  double ratio = 0.0;       // measure / (ω_n d^{n/2} K_I K_O r^n)
  double ratio_sigma = 0.0;
  long samples = 0, hits = 0, excluded = 0;

  /// Half-width of the 95% interval.
  double ci_half_width() const { return 1.96 * sigma; }
  bool within_bound(double k_sigma = 3.0) const { return ratio <= 1.0 + k_sigma * ratio_sigma; }

  nlohmann::json to_json() const {
    return {{"center", expand_json()}, {"radius", radius},   {"measure", measure},
            {"sigma", sigma},          {"ci95", ci_half_width()}, {"ratio", ratio},
            {"ratio_sigma", ratio_sigma}, {"samples", samples}, {"hits", hits},
            {"excluded", excluded}};
  }

private:
  nlohmann::json expand_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (const Vector& v : expand(center)) j.push_back(std::vector<double>(v.data(), v.data() + v.size()));
    return j;
  }
};

/// H^n of a ball in Ω_f by the area formula: ∫ 1{d_A(minv f(y), z) < r} 𝐉 minv f(y) dy,
/// importance sampled through x uniform in the balls B(z_k, r) pushed to y = f(x).
inline OmegaFSample ahlfors_sample(const BranchedCover& f, const AlmgrenPoint& z, double r, long N,
                                   std::uint64_t seed) {
  const detail::MeasureSamples s = detail::sample_fiber_ball(f, z, r, N, seed);
  const int n = f.n(), d = f.degree();
  const double bound = unit_ball_volume(n) * std::pow(d, 0.5 * n) * f.K_I() * f.K_O() * std::pow(r, n);
  OmegaFSample o;
  o.center = z;
  o.radius = r;
  o.measure = s.b.mean();
  o.sigma = s.sigma_b();
  o.ratio = o.measure / bound;
  o.ratio_sigma = o.sigma / bound;
  o.samples = s.n;
  o.hits = s.hits;
  o.excluded = s.excluded;
  return o;
}

inline std::vector<OmegaFSample> ahlfors_sampler(const BranchedCover& f, const std::vector<Vector>& centers,
                                                 const std::vector<double>& radii, long N, std::uint64_t seed) {
  std::vector<OmegaFSample> out;
  std::uint64_t k = 0;
  for (const Vector& y : centers)
    for (double r : radii) out.push_back(ahlfors_sample(f, f.preimages(y), r, N, seed + 7919 * k++));
  return out;
}

/// |(minv f ∘ f)^{-1} E| against d · H^n(E) for E = B_{Ω_f}(z, r). Both sides
/// use the same samples; PASS iff ratio ≤ d (1 + 3σ).
inline CheckReport preimage_measure_check(const BranchedCover& f, const AlmgrenPoint& z, double r, long N,
                                          std::uint64_t seed, long min_hits = 100) {
  const detail::MeasureSamples s = detail::sample_fiber_ball(f, z, r, N, seed);
  const double lebesgue = s.a.mean(), hn = s.b.mean();
  const double ratio = hn > 0 ? lebesgue / hn : std::numeric_limits<double>::infinity();
  const double sigma = s.sigma_ratio();
  const int d = f.degree();
  CheckReport rep;
  rep.check = "preimage-measure";
  rep.n_samples = s.n;
  rep.excluded = s.excluded;
  rep.max_ratio = ratio / d;
  const bool enough = s.hits >= min_hits;
  rep.pass = enough && ratio <= d * (1.0 + 3.0 * sigma);
  rep.details = {{"map", f.describe()},
                 {"radius", r},
                 {"preimage_measure", lebesgue},
                 {"preimage_sigma", s.sigma_a()},
                 {"hn_measure", hn},
                 {"hn_sigma", s.sigma_b()},
                 {"ratio", ratio},
                 {"ratio_sigma", sigma},
                 {"d", d},
                 {"hits", s.hits},
                 {"sample_budget_ok", enough}};
  return rep;
}

}  // namespace almqr
