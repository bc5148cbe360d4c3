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
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "almqr/covers.hpp"
#include "almqr/errors.hpp"
#include "almqr/lifting.hpp"
#include "almqr/report.hpp"

namespace almqr {

/// A polyline curve with a length attached to each segment. Segment lengths
/// default to Euclidean; image families carry metric lengths instead.
struct Curve {
  std::vector<Vector> pts;
  std::vector<double> seg_len;

  static Curve polyline(std::vector<Vector> pts) {
    if (pts.size() < 2) throw InvalidArgument("Curve: need at least two points");
    Curve c;
    c.pts = std::move(pts);
    for (std::size_t i = 0; i + 1 < c.pts.size(); ++i) c.seg_len.push_back((c.pts[i + 1] - c.pts[i]).norm());
    if (c.length() <= 0) throw InvalidArgument("Curve: zero length");
    return c;
  }

  double length() const {
    double s = 0.0;
    for (double l : seg_len) s += l;
    return s;
  }
  std::size_t segments() const { return seg_len.size(); }

  /// Point at parameter t ∈ [0, 1], uniform in the segment index.
  Vector at(double t) const {
    const double u = std::clamp(t, 0.0, 1.0) * segments();
    const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(u), segments() - 1);
    return pts[i] + (u - i) * (pts[i + 1] - pts[i]);
  }

  /// dγ/dt inside the segment containing t.
  Vector velocity(double t) const {
    const double u = std::clamp(t, 0.0, 1.0) * segments();
    const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(u), segments() - 1);
    return static_cast<double>(segments()) * (pts[i + 1] - pts[i]);
  }
};

struct CurveFamily {
  std::string kind;
  std::vector<Curve> curves;

  std::size_t size() const { return curves.size(); }

  /// M segments {c + r e^{iθ_k} : inner ≤ r ≤ outer} joining the boundary
  /// circles of an annulus.
  static CurveFamily radial(const Vector& center, double inner, double outer, int M, int samples = 64) {
    if (!(outer > inner && inner >= 0) || M < 1 || samples < 1) throw InvalidArgument("radial family: bad parameters");
    CurveFamily f;
    f.kind = "radial";
    for (int k = 0; k < M; ++k) {
      const double th = 2.0 * std::numbers::pi * (k + 0.5) / M;
      std::vector<Vector> pts;
      for (int s = 0; s <= samples; ++s) {
        const double r = inner + (outer - inner) * s / samples;
        pts.push_back(center + vec2(r * std::cos(th), r * std::sin(th)));
      }
      f.curves.push_back(Curve::polyline(std::move(pts)));
    }
    return f;
  }

  /// M concentric circles separating the boundary components.
  static CurveFamily circles(const Vector& center, double inner, double outer, int M, int samples = 256) {
    if (!(outer > inner && inner >= 0) || M < 1 || samples < 3) throw InvalidArgument("circle family: bad parameters");
    CurveFamily f;
    f.kind = "circles";
    for (int k = 0; k < M; ++k) {
      const double r = inner + (outer - inner) * (k + 0.5) / M;
      std::vector<Vector> pts;
      for (int s = 0; s <= samples; ++s) {
        const double th = 2.0 * std::numbers::pi * s / samples;
        pts.push_back(center + vec2(r * std::cos(th), r * std::sin(th)));
      }
      f.curves.push_back(Curve::polyline(std::move(pts)));
    }
    return f;
  }

  static CurveFamily polylines(std::vector<std::vector<Vector>> lines) {
    CurveFamily f;
    f.kind = "polyline";
    for (auto& l : lines) f.curves.push_back(Curve::polyline(std::move(l)));
    return f;
  }
};

/// Uniform N x N cell grid on a planar box.
class Grid2 {
public:
  Grid2(Vector lo, Vector hi, int N) : lo_(std::move(lo)), hi_(std::move(hi)), N_(N) {
    if (lo_.size() != 2 || hi_.size() != 2) throw InvalidArgument("Grid2: planar box required");
    if (N < 1 || ((hi_ - lo_).array() <= 0).any()) throw InvalidArgument("Grid2: empty grid");
    h_ = (hi_ - lo_) / N;
  }

  /// Square grid of side 2·half around center.
  static Grid2 around(const Vector& center, double half, int N) {
    return Grid2(Vector(center.array() - half), Vector(center.array() + half), N);
  }

  int N() const { return N_; }
  int cells() const { return N_ * N_; }
  double cell_area() const { return h_[0] * h_[1]; }
  double spacing() const { return std::min(h_[0], h_[1]); }

  int cell_of(const Vector& x) const {
    const int i = static_cast<int>(std::floor((x[0] - lo_[0]) / h_[0]));
    const int j = static_cast<int>(std::floor((x[1] - lo_[1]) / h_[1]));
    if (i < 0 || j < 0 || i >= N_ || j >= N_) return -1;
    return j * N_ + i;
  }

  Vector center(int c) const { return vec2(lo_[0] + (c % N_ + 0.5) * h_[0], lo_[1] + (c / N_ + 0.5) * h_[1]); }

private:
  Vector lo_, hi_, h_;
  int N_;
};

struct ModulusOptions {
  int max_sweeps = 10000;
  double tol = 1e-4;        // relative gap between certified bounds
  double relaxation = 1.5;  // Hildreth over-relaxation in (0, 2)
  int check_every = 10;
};

/// Optimal admissible density on the grid; values are cell constants.
struct DensityField {
  std::vector<double> rho;
  int n = 2;
  /// min over curves of ∫_γ ρ ds - 1; nonnegative for the returned field.
  double admissibility_residual = 0.0;
};

struct ModulusResult {
  double value = 0.0;        // energy of an admissible density (upper bound)
  double lower_bound = 0.0;  // dual certificate
  int sweeps = 0;
  bool converged = false;
  long constraints = 0, touched_cells = 0;
  DensityField density;

  double relative_gap() const { return value > 0 ? (value - lower_bound) / value : 0.0; }
  nlohmann::json to_json() const {
    return {{"value", value}, {"lower_bound", lower_bound}, {"relative_gap", relative_gap()},
            {"sweeps", sweeps}, {"converged", converged}, {"constraints", constraints},
            {"touched_cells", touched_cells}, {"admissibility_residual", density.admissibility_residual}};
  }
};

/// Per-cell measure: cell area for the Euclidean plane, ∫_cell 𝐉 dy for
/// families in Ω_f parametrized by f(Ω). Only cells crossed by curves are
/// queried.
using CellWeight = std::function<double(const Grid2&, int)>;

inline CellWeight euclidean_weight() {
  return [](const Grid2& g, int) { return g.cell_area(); };
}

namespace detail {

struct SparseRow {
  std::vector<int> cells;
  std::vector<double> a;
};

// Length of each curve inside each cell. Segments are split so that pieces
// are at most a quarter cell long; each piece is assigned to the cell of
// its midpoint with its share of the segment length.
inline std::vector<SparseRow> curve_rows(const CurveFamily& fam, const Grid2& g) {
  std::vector<SparseRow> rows;
  const double piece = 0.25 * g.spacing();
  for (const Curve& c : fam.curves) {
    std::map<int, double> acc;
    for (std::size_t i = 0; i < c.segments(); ++i) {
      const Vector& p = c.pts[i];
      const Vector& q = c.pts[i + 1];
      const int parts = std::max(1, static_cast<int>(std::ceil((q - p).norm() / piece)));
      for (int s = 0; s < parts; ++s) {
        const int cell = g.cell_of(p + ((s + 0.5) / parts) * (q - p));
        if (cell < 0) throw DomainError("discrete_modulus: curve leaves the grid");
        acc[cell] += c.seg_len[i] / parts;
      }
    }
    SparseRow r;
    for (const auto& [cell, a] : acc)
      if (a > 0) {
        r.cells.push_back(cell);
        r.a.push_back(a);
      }
    if (r.cells.empty()) throw InvalidArgument("discrete_modulus: curve of zero length");
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace detail

/// Mod_2 of a curve family on a grid: minimize Σ w_c ρ_c^2 subject to
/// Σ_c a_{γc} ρ_c ≥ 1 for every curve, by Hildreth's dual coordinate ascent.
/// The returned value is the energy of the rescaled (hence admissible) primal
/// iterate; lower_bound = 2Σλ - Σ w ρ^2 certifies the optimum from below.
inline ModulusResult discrete_modulus(const CurveFamily& fam, const Grid2& grid, int n = 2,
                                      const CellWeight& weight = euclidean_weight(),
                                      const ModulusOptions& opt = {}) {
  if (n != 2) throw InvalidArgument("discrete_modulus: only the exponent n = 2 is supported");
  if (fam.curves.empty()) throw InvalidArgument("discrete_modulus: empty family");
  if (!(opt.relaxation > 0 && opt.relaxation < 2)) throw InvalidArgument("discrete_modulus: relaxation in (0, 2)");
  const std::vector<detail::SparseRow> rows = detail::curve_rows(fam, grid);

  std::vector<double> w(grid.cells(), 0.0), rho(grid.cells(), 0.0), lambda(rows.size(), 0.0), norm2(rows.size(), 0.0);
  std::vector<char> touched(grid.cells(), 0);
  ModulusResult res;
  res.constraints = static_cast<long>(rows.size());
  for (const auto& r : rows)
    for (int c : r.cells)
      if (!touched[c]) {
        touched[c] = 1;
        w[c] = weight(grid, c);
        if (!(w[c] > 0)) throw NumericalError("discrete_modulus: nonpositive cell weight");
        ++res.touched_cells;
      }
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (std::size_t i = 0; i < rows[k].cells.size(); ++i) norm2[k] += rows[k].a[i] * rows[k].a[i] / w[rows[k].cells[i]];

  auto line_integral = [&](std::size_t k) {
    double s = 0.0;
    for (std::size_t i = 0; i < rows[k].cells.size(); ++i) s += rows[k].a[i] * rho[rows[k].cells[i]];
    return s;
  };
  auto bounds = [&](double& upper, double& lower, double& min_line) {
    double energy = 0.0, sum_lambda = 0.0;
    for (int c = 0; c < grid.cells(); ++c) energy += w[c] * rho[c] * rho[c];
    for (double l : lambda) sum_lambda += l;
    min_line = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < rows.size(); ++k) min_line = std::min(min_line, line_integral(k));
    upper = min_line > 0 ? energy / (min_line * min_line) : std::numeric_limits<double>::infinity();
    lower = std::max(0.0, 2.0 * sum_lambda - energy);
  };

  double upper = 0, lower = 0, min_line = 0;
  for (res.sweeps = 1; res.sweeps <= opt.max_sweeps; ++res.sweeps) {
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const double delta = opt.relaxation * (1.0 - line_integral(k)) / norm2[k];
      const double next = std::max(0.0, lambda[k] + delta);
      const double step = next - lambda[k];
      if (step == 0.0) continue;
      lambda[k] = next;
      for (std::size_t i = 0; i < rows[k].cells.size(); ++i)
        rho[rows[k].cells[i]] += step * rows[k].a[i] / w[rows[k].cells[i]];
    }
    if (res.sweeps % opt.check_every == 0 || res.sweeps == opt.max_sweeps) {
      bounds(upper, lower, min_line);
      if (upper - lower <= opt.tol * upper) {
        res.converged = true;
        break;
      }
    }
  }
  if (res.sweeps > opt.max_sweeps) res.sweeps = opt.max_sweeps;
  bounds(upper, lower, min_line);
  res.value = upper;
  res.lower_bound = lower;
  res.density.rho = rho;
  if (min_line > 0)
    for (double& r : res.density.rho) r /= min_line;
  res.density.admissibility_residual = 0.0;
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < rows[k].cells.size(); ++i) s += rows[k].a[i] * res.density.rho[rows[k].cells[i]];
    worst = std::min(worst, s);
  }
  res.density.admissibility_residual = worst - 1.0;
  return res;
}

/// Image family minv f(Γ) in Ω_f, in the y-coordinates of f(Ω): each
/// segment carries the A_d length of its lifted image, (Σ_j |Δ lift_j|^2)^{1/2},
/// with lifts from lift_path. Curves whose lifting fails are dropped and counted.
inline CurveFamily image_family(const BranchedCover& f, const CurveFamily& fam, long& failures,
                                std::vector<std::size_t>* kept = nullptr) {
  CurveFamily out;
  if (kept) kept->clear();
  out.kind = fam.kind + "-image";
  failures = 0;
  for (std::size_t k = 0; k < fam.curves.size(); ++k) {
    const Curve& c = fam.curves[k];
    LiftOptions lo;
    lo.samples = static_cast<int>(c.pts.size());
    lo.h_init = std::min(1e-2, 1.0 / c.segments());
    try {
      const LiftedPath lp = lift_path(f, [&c](double t) { return c.at(t); }, lo);
      Curve img;
      img.pts = c.pts;
      for (std::size_t s = 0; s < c.segments(); ++s) {
        double l2 = 0.0;
        for (const auto& lift : lp.lifts) l2 += (lift[s + 1] - lift[s]).squaredNorm();
        img.seg_len.push_back(std::sqrt(l2));
      }
      out.curves.push_back(std::move(img));
      if (kept) kept->push_back(k);
    } catch (const StepUnderflowError&) {
      ++failures;
    }
  }
  return out;
}

/// Cell weight ∫_cell 𝐉 minv f dy by the 2 x 2 Gauss rule; 𝐉 is the metric
/// Jacobian sqrt det Σ_j Dg_j^T Dg_j.
inline CellWeight inverse_jacobian_weight(const BranchedCover& f) {
  return [&f](const Grid2& g, int c) {
    const Vector mid = g.center(c);
    const double h = std::sqrt(g.cell_area()), off = 0.5 * h / std::sqrt(3.0);
    double s = 0.0;
    for (int a = -1; a <= 1; a += 2)
      for (int b = -1; b <= 1; b += 2) s += inverse_jacobian(f, mid + vec2(a * off, b * off));
    return 0.25 * s * g.cell_area();
  };
}

struct PushforwardModulusOptions {
  ModulusOptions solver;
  double slack = 0.05;
};

/// Mod_2(Γ) against Mod_2(minv f(Γ)); PASS iff the ratio lies in
/// [1/(K_I K_O) - slack, K_I K_O + slack].
inline CheckReport pushforward_modulus_check(const BranchedCover& f, const CurveFamily& fam, const Grid2& grid,
                                             const PushforwardModulusOptions& opt = {}) {
  if (f.n() != 2) throw InvalidArgument("pushforward_modulus_check: planar maps only");
  long failures = 0;
  std::vector<std::size_t> kept;
  const CurveFamily img = image_family(f, fam, failures, &kept);
  if (img.curves.empty()) throw NumericalError("pushforward_modulus_check: no curve could be lifted");
  CurveFamily lifted;
  lifted.kind = fam.kind;
  for (std::size_t k : kept) lifted.curves.push_back(fam.curves[k]);
  const ModulusResult base = discrete_modulus(lifted, grid, 2, euclidean_weight(), opt.solver);
  const ModulusResult image = discrete_modulus(img, grid, 2, inverse_jacobian_weight(f), opt.solver);
  const double K = f.K_I() * f.K_O();
  const double ratio = image.value / base.value;
  CheckReport r;
  r.check = "geom-qc";
  r.n_samples = static_cast<long>(img.size());
  r.excluded = failures;
  r.max_ratio = std::max(ratio, 1.0 / ratio);
  r.pass = ratio >= 1.0 / K - opt.slack && ratio <= K + opt.slack && base.converged && image.converged;
  r.details = {{"map", f.describe()},      {"family", fam.kind},         {"grid", grid.N()},
               {"mod_base", base.value},   {"mod_image", image.value},   {"ratio", ratio},
               {"K_I_K_O", K},             {"slack", opt.slack},         {"base_solver", base.to_json()},
               {"image_solver", image.to_json()}};
  return r;
}

}  // namespace almqr
