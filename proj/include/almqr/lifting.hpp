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
#include <functional>
#include <limits>
#include <vector>

#include "almqr/assignment.hpp"
#include "almqr/covers.hpp"

namespace almqr {

struct LiftOptions {
  int samples = 101;             // recorded parameters t_s = s / (samples - 1)
  double h_init = 1e-2;          // also the largest step
  double h_min = 1e-8;
  double jump_factor = 0.5;      // accepted jump ≤ jump_factor · fiber gap
  double merge_gap = 1e-6;       // fiber points closer than this are one cluster
  double branch_proximity = 1e-4;  // steps at h_min are forced through when γ is this close to f(B_f)
  long max_steps = 10000000;
};

/// Lifts of a path: lifts[j][s] is the j-th lift at ts[s]. The multiset
/// {lifts[j][s]}_j equals expand(minv f(γ(ts[s]))) at every sample.
struct LiftedPath {
  std::vector<double> ts;
  std::vector<std::vector<Vector>> lifts;
  /// Largest distance between a predicted and an accepted lift position.
  double max_jump = 0.0;
  /// Largest displacement of a single lift in one accepted step.
  double max_step = 0.0;
  /// Lift j ends at expand(minv f(γ(0)))[monodromy[j]] when γ(1) = γ(0);
  /// otherwise it is the matching of the end fiber onto the start fiber.
  std::vector<int> monodromy;
  long steps = 0, rejected = 0;
  std::vector<double> branch_passages;

  bool closed_with_swap() const {
    for (std::size_t j = 0; j < monodromy.size(); ++j)
      if (monodromy[j] != static_cast<int>(j)) return true;
    return false;
  }
};

namespace detail {
// Smallest distance between distinct clusters of `pts` (points within
// `merge` of each other are one cluster, by single linkage).
inline double cluster_gap(const std::vector<Vector>& pts, double merge) {
  const int d = static_cast<int>(pts.size());
  std::vector<int> label(d);
  for (int i = 0; i < d; ++i) label[i] = i;
  auto find = [&](int i) {
    while (label[i] != i) i = label[i] = label[label[i]];
    return i;
  };
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if ((pts[i] - pts[j]).norm() < merge) label[find(i)] = find(j);
  double gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (find(i) != find(j)) gap = std::min(gap, (pts[i] - pts[j]).norm());
  return gap;
}
}  // namespace detail

/// Predictor-corrector continuation of the d lifts of γ: [0,1] -> R^n.
/// Each step predicts lift positions by linear extrapolation, matches them to
/// the fiber at the new parameter by optimal assignment and accepts when the
/// largest jump is below jump_factor times the gap between fiber clusters;
/// otherwise the step is halved. Near branch values (within
/// branch_proximity) a step at h_min is accepted with the optimal matching,
/// which is a valid continuation because lifts through branch points are not
/// unique; elsewhere reaching h_min raises StepUnderflowError.
inline LiftedPath lift_path(const BranchedCover& f, const std::function<Vector(double)>& gamma,
                            const LiftOptions& opt = {}) {
  if (opt.samples < 2) throw InvalidArgument("lift_path: need at least two samples");
  if (!(opt.h_min > 0 && opt.h_init >= opt.h_min)) throw InvalidArgument("lift_path: bad step bounds");
  auto base = [&](double t) {
    Vector y = gamma(t);
    if (y.size() != f.n() || !y.allFinite()) throw DomainError("lift_path: path leaves the image");
    return y;
  };

  LiftedPath out;
  const int d = f.degree();
  out.ts.resize(opt.samples);
  for (int s = 0; s < opt.samples; ++s) out.ts[s] = static_cast<double>(s) / (opt.samples - 1);
  out.lifts.assign(d, std::vector<Vector>(opt.samples));

  std::vector<Vector> x = expand(f.preimages(base(0.0)));
  const std::vector<Vector> start = x;
  std::vector<Vector> prev;
  double h_prev = 0.0;
  for (int j = 0; j < d; ++j) out.lifts[j][0] = x[j];

  double t = 0.0, h = opt.h_init;
  int next_sample = 1;
  while (next_sample < opt.samples) {
    if (++out.steps > opt.max_steps) throw StepUnderflowError("lift_path: step budget exhausted", t);
    const double target = out.ts[next_sample];
    const bool hits_sample = t + h >= target - 1e-15;
    const double t_next = hits_sample ? target : t + h;
    const double hh = t_next - t;
    const Vector y_next = base(t_next);
    const std::vector<Vector> fiber = expand(f.preimages(y_next));

    std::vector<Vector> pred = x;
    if (!prev.empty() && h_prev > 0)
      for (int j = 0; j < d; ++j) pred[j] = x[j] + (x[j] - prev[j]) * (hh / h_prev);
    const Assignment a = solve_assignment_lexmin(squared_distance_matrix(pred, fiber));
    double jump = 0.0;
    for (int j = 0; j < d; ++j) jump = std::max(jump, (fiber[a.perm[j]] - pred[j]).norm());
    const double threshold = opt.jump_factor * detail::cluster_gap(fiber, opt.merge_gap);

    bool accept = jump <= threshold;
    if (!accept) {
      if (hh * 0.5 >= opt.h_min) {
        h = hh * 0.5;
        ++out.rejected;
        continue;
      }
      const double prox = std::min(f.distance_to_branch_values(base(t)),
                                   f.distance_to_branch_values(y_next));
      if (prox > opt.branch_proximity)
        throw StepUnderflowError("lift_path: step underflow away from branch values", t);
      out.branch_passages.push_back(t_next);
      accept = true;
    }

    double step = 0.0;
    std::vector<Vector> nx(d);
    for (int j = 0; j < d; ++j) {
      nx[j] = fiber[a.perm[j]];
      step = std::max(step, (nx[j] - x[j]).norm());
    }
    out.max_jump = std::max(out.max_jump, jump);
    out.max_step = std::max(out.max_step, step);
    prev = std::move(x);
    x = std::move(nx);
    h_prev = hh;
    t = t_next;
    if (hits_sample) {
      for (int j = 0; j < d; ++j) out.lifts[j][next_sample] = x[j];
      ++next_sample;
    }
    h = std::min(2.0 * hh, opt.h_init);
  }

  const Assignment end = solve_assignment_lexmin(squared_distance_matrix(x, start));
  out.monodromy = end.perm;
  return out;
}

}  // namespace almqr
