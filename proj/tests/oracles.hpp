#pragma once

// Independent reference implementations used as test oracles. None of these
// share code with the library under test.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "visiplan/env.hpp"
#include "visiplan/spline.hpp"

namespace visiplan::oracle {

/// O(N^2) scan: distance from every cell center to the nearest occupied cell
/// center, clamped.
inline std::vector<double> brute_force_esdf(const OccupancyGrid& grid, double d_trunc) {
  const Vec3i n = grid.dims();
  std::vector<Vec3i> occupied;
  for (int k = 0; k < n.z(); ++k)
    for (int j = 0; j < n.y(); ++j)
      for (int i = 0; i < n.x(); ++i)
        if (grid.occupied(Vec3i(i, j, k))) occupied.emplace_back(i, j, k);
  std::vector<double> out(grid.cell_count(), d_trunc);
  for (int k = 0; k < n.z(); ++k)
    for (int j = 0; j < n.y(); ++j)
      for (int i = 0; i < n.x(); ++i) {
        long best = std::numeric_limits<long>::max();
        for (const Vec3i& o : occupied) {
          const long dx = o.x() - i, dy = o.y() - j, dz = o.z() - k;
          best = std::min(best, dx * dx + dy * dy + dz * dz);
        }
        if (best == std::numeric_limits<long>::max()) continue;
        out[grid.linear_index(Vec3i(i, j, k))] =
            std::min(d_trunc, grid.resolution() * std::sqrt(static_cast<double>(best)));
      }
  return out;
}

/// Explicit 8-corner weighted sum over cell-center values, with the query
/// clamped to the box spanned by the centers. Single-layer axes are ignored.
inline double trilinear(const EsdfField& f, const Vec3& p) {
  int lo[3];
  double w[3];
  for (int a = 0; a < 3; ++a) {
    const int len = f.dims()[a];
    if (len == 1) {
      lo[a] = 0;
      w[a] = 0.0;
      continue;
    }
    const double u = std::clamp((p[a] - f.origin()[a]) / f.resolution() - 0.5, 0.0, len - 1.0);
    lo[a] = std::min(static_cast<int>(u), len - 2);
    w[a] = u - lo[a];
  }
  double sum = 0.0;
  for (int corner = 0; corner < 8; ++corner) {
    double weight = 1.0;
    Vec3i c;
    bool skip = false;
    for (int a = 0; a < 3; ++a) {
      const int bit = (corner >> a) & 1;
      if (f.dims()[a] == 1 && bit) skip = true;
      c[a] = lo[a] + bit;
      weight *= bit ? w[a] : 1.0 - w[a];
    }
    if (skip) continue;
    sum += weight * f.cell_distance(c);
  }
  return sum;
}

/// True when p lies within `margin` of a plane where the interpolant changes
/// cell (cell-center planes) or is clamped.
inline bool near_interpolation_seam(const EsdfField& f, const Vec3& p, double margin) {
  for (int a = 0; a < 3; ++a) {
    if (f.dims()[a] == 1) continue;
    const double u = (p[a] - f.origin()[a]) / f.resolution() - 0.5;
    if (u < margin / f.resolution() || u > f.dims()[a] - 1 - margin / f.resolution()) return true;
    const double frac = u - std::floor(u);
    if (std::min(frac, 1.0 - frac) * f.resolution() < margin) return true;
  }
  return false;
}

/// Textbook de Boor recursion for a B-spline of degree p with knot vector
/// `knots` (size ctrl.size() + p + 1), evaluated at t in [knots[p],
/// knots[ctrl.size()]].
template <typename T>
T de_boor(int p, const std::vector<double>& knots, const std::vector<T>& ctrl, double t) {
  const int n = static_cast<int>(ctrl.size());
  int k = p;
  while (k < n - 1 && t >= knots[k + 1]) ++k;
  std::vector<T> d(p + 1);
  for (int j = 0; j <= p; ++j) d[j] = ctrl[j + k - p];
  for (int r = 1; r <= p; ++r)
    for (int j = p; j >= r; --j) {
      const double alpha = (t - knots[j + k - p]) / (knots[j + 1 + k - r] - knots[j + k - p]);
      d[j] = (1.0 - alpha) * d[j - 1] + alpha * d[j];
    }
  return d[p];
}

/// Uniform knots for a cubic spline with n control points whose valid domain
/// starts at 0: knot j sits at (j - 3) dt.
inline std::vector<double> uniform_knots(int count, double dt, int shift = 3) {
  std::vector<double> k(count);
  for (int j = 0; j < count; ++j) k[j] = (j - shift) * dt;
  return k;
}

/// Dense point sampling along a segment at `step` spacing.
inline bool dense_occluded(const OccupancyGrid& grid, const Vec3& a, const Vec3& b, double step) {
  const double len = (b - a).norm();
  const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
  for (int i = 0; i <= n; ++i) {
    Vec3 p = a + (b - a) * (static_cast<double>(i) / n);
    if (grid.planar()) p.z() = grid.origin().z();
    if (grid.occupied_at(p)) return true;
  }
  return false;
}

/// Slab test of segment a-b against every occupied cell box. Exact up to
/// floating point; planar grids compare x/y only.
inline bool box_occluded(const OccupancyGrid& grid, const Vec3& a, const Vec3& b) {
  const int dim = grid.planar() ? 2 : 3;
  const Vec3i n = grid.dims();
  for (int k = 0; k < n.z(); ++k)
    for (int j = 0; j < n.y(); ++j)
      for (int i = 0; i < n.x(); ++i) {
        const Vec3i c(i, j, k);
        if (!grid.occupied(c)) continue;
        const Vec3 lo = grid.origin() + c.cast<double>() * grid.resolution();
        double s0 = 0.0, s1 = 1.0;
        bool hit = true;
        for (int ax = 0; ax < dim && hit; ++ax) {
          const double d = b[ax] - a[ax];
          const double l = lo[ax], h = lo[ax] + grid.resolution();
          if (d == 0.0) {
            hit = a[ax] >= l && a[ax] <= h;
            continue;
          }
          double ta = (l - a[ax]) / d, tb = (h - a[ax]) / d;
          if (ta > tb) std::swap(ta, tb);
          s0 = std::max(s0, ta);
          s1 = std::min(s1, tb);
          hit = s0 <= s1;
        }
        if (hit) return true;
      }
  return false;
}

/// Central finite difference of f along every coordinate of x.
inline std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& f,
                                              std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    x[i] = x0;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// max |a - b| / max(max |b|, floor).
inline double relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric,
                             double floor = 1e-8) {
  double diff = 0.0, scale = floor;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max(scale, std::abs(numeric[i]));
  }
  return diff / scale;
}

}  // namespace visiplan::oracle
