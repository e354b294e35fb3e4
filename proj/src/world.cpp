#include "visiplan/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace visiplan {

std::uint64_t Rng::next() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

OccupancyGrid generate_random_forest(const ForestSpec& spec, std::vector<Cylinder>* placed) {
  if (spec.obstacle_count < 0) throw ConfigError("forest: obstacle_count must be >= 0");
  if (!(spec.resolution > 0.0)) throw ConfigError("forest: resolution must be positive");
  if (!(spec.radius_min > 0.0 && spec.radius_max >= spec.radius_min))
    throw ConfigError("forest: need 0 < radius_min <= radius_max");
  const Vec3 extent = spec.area_max - spec.area_min;
  if (!(extent.x() > 0.0 && extent.y() > 0.0)) throw ConfigError("forest: area must have positive extent");

  const Vec3i dims(static_cast<int>(std::ceil(extent.x() / spec.resolution - 1e-9)),
                   static_cast<int>(std::ceil(extent.y() / spec.resolution - 1e-9)), 1);
  OccupancyGrid grid(spec.resolution, Vec3(spec.area_min.x(), spec.area_min.y(), 0.0), dims);
  Rng rng(spec.seed);
  std::vector<Cylinder> cylinders;
  int attempts = 0;
  while (static_cast<int>(cylinders.size()) < spec.obstacle_count) {
    if (attempts++ > spec.max_retries + spec.obstacle_count)
      throw ConfigError("forest: could not place obstacles while keeping the required clearance");
    Cylinder cyl;
    cyl.center = Vec3(rng.uniform(spec.area_min.x(), spec.area_max.x()),
                      rng.uniform(spec.area_min.y(), spec.area_max.y()), 0.0);
    cyl.radius = rng.uniform(spec.radius_min, spec.radius_max);
    bool ok = true;
    for (const Vec3& p : spec.keep_clear) {
      const double gap = (p - cyl.center).head<2>().norm() - cyl.radius;
      if (gap < spec.clearance + spec.resolution) ok = false;
    }
    if (ok) cylinders.push_back(cyl);
  }

  for (const Cylinder& cyl : cylinders) {
    const Vec3i lo = grid.cell_of(cyl.center - Vec3(cyl.radius, cyl.radius, 0.0));
    const Vec3i hi = grid.cell_of(cyl.center + Vec3(cyl.radius, cyl.radius, 0.0));
    for (int y = std::max(lo.y(), 0); y <= std::min(hi.y(), dims.y() - 1); ++y)
      for (int x = std::max(lo.x(), 0); x <= std::min(hi.x(), dims.x() - 1); ++x) {
        const Vec3i c(x, y, 0);
        if ((grid.center_of(c) - cyl.center).head<2>().norm() <= cyl.radius) grid.set_occupied(c);
      }
  }
  if (placed) *placed = std::move(cylinders);
  return grid;
}

namespace {

std::vector<Vec3> chaikin(const std::vector<Vec3>& pts) {
  if (pts.size() < 3) return pts;
  std::vector<Vec3> out;
  out.reserve(2 * pts.size());
  out.push_back(pts.front());
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    out.push_back(0.75 * pts[i] + 0.25 * pts[i + 1]);
    out.push_back(0.25 * pts[i] + 0.75 * pts[i + 1]);
  }
  out.push_back(pts.back());
  return out;
}

}  // namespace

TargetMotion::TargetMotion(std::vector<Vec3> waypoints, double speed, int corner_smoothing,
                           double start_delay)
    : start_delay_(start_delay) {
  if (waypoints.empty()) throw ConfigError("target: need at least one waypoint");
  if (!(speed > 0.0)) throw ConfigError("target: speed must be positive");
  if (!(start_delay >= 0.0)) throw ConfigError("target: start_delay must be >= 0");
  for (int i = 0; i < corner_smoothing; ++i) waypoints = chaikin(waypoints);
  // Drop repeated points so every segment has positive length.
  for (const Vec3& p : waypoints)
    if (points_.empty() || (p - points_.back()).norm() > 1e-9) points_.push_back(p);
  times_.assign(points_.size(), 0.0);
  for (std::size_t i = 1; i < points_.size(); ++i)
    times_[i] = times_[i - 1] + (points_[i] - points_[i - 1]).norm() / speed;
}

TargetMotion TargetMotion::timed(std::vector<Vec3> points, std::vector<double> times) {
  if (points.empty() || points.size() != times.size())
    throw ConfigError("target: timed waypoints need one time per point");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw ConfigError("target: waypoint times must increase strictly");
  if (!(times.front() >= 0.0)) throw ConfigError("target: waypoint times must be >= 0");
  TargetMotion m;
  m.start_delay_ = times.front();
  m.points_ = std::move(points);
  for (double t : times) m.times_.push_back(t - times.front());
  return m;
}

Vec3 TargetMotion::position(double t) const {
  if (points_.empty()) return Vec3::Zero();
  const double s = t - start_delay_;
  if (s <= 0.0) return points_.front();
  if (s >= times_.back()) return points_.back();
  const auto it = std::upper_bound(times_.begin(), times_.end(), s);
  const std::size_t i = static_cast<std::size_t>(it - times_.begin());
  const double w = (s - times_[i - 1]) / (times_[i] - times_[i - 1]);
  return (1.0 - w) * points_[i - 1] + w * points_[i];
}

Vec3 TargetMotion::velocity(double t) const {
  if (points_.size() < 2) return Vec3::Zero();
  const double s = t - start_delay_;
  if (s < 0.0 || s >= times_.back()) return Vec3::Zero();
  const auto it = std::upper_bound(times_.begin(), times_.end(), s);
  const std::size_t i = static_cast<std::size_t>(it - times_.begin());
  return (points_[i] - points_[i - 1]) / (times_[i] - times_[i - 1]);
}

namespace {

// 8-connected A* over cells whose stored clearance is at least `margin`.
std::vector<Vec3i> grid_route(const OccupancyGrid& grid, const EsdfField& field, const Vec3i& from,
                              const Vec3i& to, double margin) {
  const int nx = grid.dims().x(), ny = grid.dims().y();
  auto idx = [&](int x, int y) { return static_cast<std::size_t>(y) * nx + x; };
  auto passable = [&](int x, int y) {
    return x >= 0 && y >= 0 && x < nx && y < ny && field.cell_distance(Vec3i(x, y, 0)) >= margin;
  };
  if (!passable(from.x(), from.y()) || !passable(to.x(), to.y())) return {};
  std::vector<double> g(static_cast<std::size_t>(nx) * ny, std::numeric_limits<double>::infinity());
  std::vector<int> parent(g.size(), -1);
  auto octile = [&](int x, int y) {
    const double dx = std::abs(x - to.x()), dy = std::abs(y - to.y());
    return std::max(dx, dy) + (std::sqrt(2.0) - 1.0) * std::min(dx, dy);
  };
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  g[idx(from.x(), from.y())] = 0.0;
  open.push({octile(from.x(), from.y()), idx(from.x(), from.y())});
  const std::size_t goal = idx(to.x(), to.y());
  while (!open.empty()) {
    const auto [f, cur] = open.top();
    open.pop();
    if (cur == goal) break;
    const int cx = static_cast<int>(cur % nx), cy = static_cast<int>(cur / nx);
    if (f - octile(cx, cy) > g[cur] + 1e-9) continue;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (!dx && !dy) continue;
        const int x = cx + dx, y = cy + dy;
        if (!passable(x, y)) continue;
        if (dx && dy && (!passable(cx + dx, cy) || !passable(cx, cy + dy))) continue;
        const double ng = g[cur] + ((dx && dy) ? std::sqrt(2.0) : 1.0);
        const std::size_t ni = idx(x, y);
        if (ng < g[ni] - 1e-12) {
          g[ni] = ng;
          parent[ni] = static_cast<int>(cur);
          open.push({ng + octile(x, y), ni});
        }
      }
  }
  if (parent[goal] < 0 && goal != idx(from.x(), from.y())) return {};
  std::vector<Vec3i> route;
  for (int i = static_cast<int>(goal); i >= 0; i = parent[i]) route.emplace_back(i % nx, i / nx, 0);
  std::reverse(route.begin(), route.end());
  return route;
}

}  // namespace

TargetMotion random_target_motion(const OccupancyGrid& grid, const EsdfField& field,
                                  const Vec3& start, const RandomTargetSpec& spec) {
  if (!grid.planar()) throw ConfigError("random target: only planar maps are supported");
  if (!(spec.speed > 0.0 && spec.duration > 0.0)) throw ConfigError("random target: speed and duration must be positive");
  Rng rng(spec.seed);
  const double needed = spec.speed * spec.duration + 1.0;
  const double z = start.z();
  const Vec3 lo = grid.origin() + Vec3(spec.margin, spec.margin, 0.0);
  const Vec3 hi = grid.max_corner() - Vec3(spec.margin, spec.margin, 0.0);

  std::vector<Vec3> route{start};
  Vec3i current = grid.cell_of(start);
  // Start may sit closer than the margin; route out of it with a relaxed margin.
  double length = 0.0;
  int failures = 0;
  const double sample_spacing = 0.5;
  while (length < needed) {
    if (failures > 200) throw ConfigError("random target: no reachable goals from the target start");
    const Vec3 goal(rng.uniform(lo.x(), hi.x()), rng.uniform(lo.y(), hi.y()), z);
    const Vec3i gcell = grid.cell_of(goal);
    if (!grid.in_bounds(gcell) || field.cell_distance(gcell) < spec.margin ||
        (goal - route.back()).norm() < spec.min_leg) {
      ++failures;
      continue;
    }
    const double route_margin =
        std::min(spec.margin, field.cell_distance(current) - 1e-9);
    auto cells = grid_route(grid, field, current, gcell, route_margin);
    if (cells.empty()) {
      ++failures;
      continue;
    }
    failures = 0;
    const int stride = std::max(1, static_cast<int>(std::round(sample_spacing / grid.resolution())));
    for (std::size_t i = stride; i < cells.size(); i += stride) {
      Vec3 p = grid.center_of(cells[i]);
      p.z() = z;
      length += (p - route.back()).norm();
      route.push_back(p);
    }
    Vec3 end = grid.center_of(cells.back());
    end.z() = z;
    if ((end - route.back()).norm() > 1e-9) {
      length += (end - route.back()).norm();
      route.push_back(end);
    }
    current = cells.back();
  }
  return TargetMotion(std::move(route), spec.speed, 2, spec.start_delay);
}

}  // namespace visiplan
