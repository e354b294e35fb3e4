#include "visiplan/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace visiplan {

OccupancyGrid::OccupancyGrid(double resolution, const Vec3& origin, const Vec3i& dims)
    : resolution_(resolution), origin_(origin), dims_(dims) {
  if (!(resolution > 0.0)) throw ConfigError("grid resolution must be positive");
  if ((dims.array() < 1).any()) throw ConfigError("grid dims must be >= 1 on every axis");
  occupied_.assign(static_cast<std::size_t>(dims.x()) * dims.y() * dims.z(), 0);
}

Vec3i OccupancyGrid::cell_of(const Vec3& p) const {
  Vec3 u = (p - origin_) / resolution_;
  Vec3i c(static_cast<int>(std::floor(u.x())), static_cast<int>(std::floor(u.y())),
          static_cast<int>(std::floor(u.z())));
  if (planar()) c.z() = 0;
  return c;
}

Vec3 OccupancyGrid::center_of(const Vec3i& c) const {
  return origin_ + (c.cast<double>().array() + 0.5).matrix() * resolution_;
}

void OccupancyGrid::set_occupied(const Vec3i& c, bool value) {
  if (!in_bounds(c)) throw RangeError("set_occupied: cell out of bounds");
  occupied_[linear_index(c)] = value ? 1 : 0;
}

std::size_t OccupancyGrid::occupied_count() const {
  return static_cast<std::size_t>(std::count(occupied_.begin(), occupied_.end(), 1));
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1-D squared distance transform of sampled function f (lower envelope of
// parabolas). Entries equal to +inf are excluded from the envelope.
void transform_1d(const std::vector<double>& f, std::vector<double>& d,
                  std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    auto intersect = [&](int p) {
      return ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
    };
    // z[0] = -inf bounds the loop.
    double s = intersect(v[k]);
    while (s <= z[k]) {
      --k;
      s = intersect(v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (k < 0) {
    std::fill(d.begin(), d.end(), kInf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double dq = q - v[j];
    d[q] = dq * dq + f[v[j]];
  }
}

}  // namespace

EsdfField build_esdf(const OccupancyGrid& grid, double d_trunc) {
  if (!(d_trunc > 0.0)) throw ConfigError("d_trunc must be positive");
  EsdfField field;
  field.resolution_ = grid.resolution();
  field.origin_ = grid.origin();
  field.dims_ = grid.dims();
  field.d_trunc_ = d_trunc;

  const Vec3i n = grid.dims();
  const std::size_t total = grid.cell_count();
  // Squared distance in cell units; integers represented exactly.
  std::vector<double> sq(total);
  for (int zk = 0; zk < n.z(); ++zk)
    for (int yj = 0; yj < n.y(); ++yj)
      for (int xi = 0; xi < n.x(); ++xi) {
        Vec3i c(xi, yj, zk);
        sq[grid.linear_index(c)] = grid.occupied(c) ? 0.0 : kInf;
      }

  const int max_n = n.maxCoeff();
  std::vector<double> f(max_n), d(max_n), z(max_n + 1);
  std::vector<int> v(max_n);

  auto pass = [&](int axis) {
    const int len = n[axis];
    f.resize(len);
    d.resize(len);
    const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
    for (int i2 = 0; i2 < n[a2]; ++i2)
      for (int i1 = 0; i1 < n[a1]; ++i1) {
        Vec3i c;
        c[a1] = i1;
        c[a2] = i2;
        for (int q = 0; q < len; ++q) {
          c[axis] = q;
          f[q] = sq[grid.linear_index(c)];
        }
        transform_1d(f, d, v, z);
        for (int q = 0; q < len; ++q) {
          c[axis] = q;
          sq[grid.linear_index(c)] = d[q];
        }
      }
  };
  for (int axis = 0; axis < 3; ++axis) {
    if (n[axis] > 1) pass(axis);
  }

  field.distance_.resize(total);
  for (std::size_t i = 0; i < total; ++i) {
    const double dist = sq[i] == kInf ? kInf : grid.resolution() * std::sqrt(sq[i]);
    field.distance_[i] = std::min(dist, d_trunc);
  }
  return field;
}

double EsdfField::sample(const Vec3& p, Vec3* gradient) const {
  int i0[3];
  double frac[3];
  bool active[3];
  for (int a = 0; a < 3; ++a) {
    const int len = dims_[a];
    double u = (p[a] - origin_[a]) / resolution_ - 0.5;
    if (len == 1) {
      i0[a] = 0;
      frac[a] = 0.0;
      active[a] = false;
      continue;
    }
    active[a] = true;
    if (u <= 0.0) {
      u = 0.0;
      active[a] = false;
    } else if (u >= len - 1) {
      u = len - 1;
      active[a] = false;
    }
    int i = static_cast<int>(std::floor(u));
    if (i > len - 2) i = len - 2;
    i0[a] = i;
    frac[a] = u - i;
  }

  const int step[3] = {dims_.x() > 1 ? 1 : 0, dims_.y() > 1 ? 1 : 0, dims_.z() > 1 ? 1 : 0};
  double c[2][2][2];
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx)
        c[dx][dy][dz] = cell_distance(
            Vec3i(i0[0] + dx * step[0], i0[1] + dy * step[1], i0[2] + dz * step[2]));

  const double fx = frac[0], fy = frac[1], fz = frac[2];
  // Interpolate along x, then y, then z.
  double cxy[2][2], dcxy[2][2];
  for (int dy = 0; dy < 2; ++dy)
    for (int dz = 0; dz < 2; ++dz) {
      cxy[dy][dz] = c[0][dy][dz] * (1 - fx) + c[1][dy][dz] * fx;
      dcxy[dy][dz] = c[1][dy][dz] - c[0][dy][dz];
    }
  double cz[2], dxz[2], dyz[2];
  for (int dz = 0; dz < 2; ++dz) {
    cz[dz] = cxy[0][dz] * (1 - fy) + cxy[1][dz] * fy;
    dxz[dz] = dcxy[0][dz] * (1 - fy) + dcxy[1][dz] * fy;
    dyz[dz] = cxy[1][dz] - cxy[0][dz];
  }
  const double value = cz[0] * (1 - fz) + cz[1] * fz;
  if (gradient) {
    const double inv = 1.0 / resolution_;
    (*gradient)[0] = active[0] ? (dxz[0] * (1 - fz) + dxz[1] * fz) * inv : 0.0;
    (*gradient)[1] = active[1] ? (dyz[0] * (1 - fz) + dyz[1] * fz) * inv : 0.0;
    (*gradient)[2] = active[2] ? (cz[1] - cz[0]) * inv : 0.0;
  }
  return value;
}

double EsdfField::sample_distance(const Vec3& p) const { return sample(p, nullptr); }

Vec3 EsdfField::sample_gradient(const Vec3& p) const {
  Vec3 g;
  sample(p, &g);
  return g;
}

}  // namespace visiplan
