#include "visiplan/search.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <unordered_map>

namespace visiplan {

void SearchConfig::validate() const {
  if (!(tau > 0.0)) throw ConfigError("search: tau must be positive");
  if (!(accel_per_axis >= 0.0)) throw ConfigError("search: accel_per_axis must be >= 0");
  if (!(prune_resolution >= 0.0)) throw ConfigError("search: prune_resolution must be >= 0");
  if (prune_resolution > 0.0 && !(velocity_resolution > 0.0))
    throw ConfigError("search: velocity_resolution must be positive");
  if (!(heuristic_weight >= 1.0)) throw ConfigError("search: heuristic_weight must be >= 1");
  if (max_expansions < 1) throw ConfigError("search: max_expansions must be positive");
  if (!(standoff > 0.0 && goal_tolerance > 0.0)) throw ConfigError("search: goal annulus must be positive");
  if (!(horizon >= tau)) throw ConfigError("search: horizon must cover at least one primitive");
  if (collision_samples < 2) throw ConfigError("search: collision_samples must be >= 2");
  if (!(effort_weight >= 0.0)) throw ConfigError("search: effort_weight must be >= 0");
  if (!(standoff_weight >= 0.0)) throw ConfigError("search: standoff_weight must be >= 0");
  if (!(target_speed_bound >= 0.0)) throw ConfigError("search: target_speed_bound must be >= 0");
}

std::vector<TimedPoint> SearchResult::timed_path() const {
  std::vector<TimedPoint> out;
  out.reserve(nodes.size());
  for (const auto& n : nodes) out.push_back({n.t, n.p});
  return out;
}

bool raycast_occluded(const OccupancyGrid& grid, const Vec3& a, const Vec3& b) {
  const int dim = grid.planar() ? 2 : 3;
  const double res = grid.resolution();
  double ua[3], dir[3], lo[3];
  for (int i = 0; i < dim; ++i) {
    ua[i] = (a[i] - grid.origin()[i]) / res;
    dir[i] = (b[i] - a[i]) / res;
    lo[i] = 0.0;
  }

  // Clip the parametric segment ua + s * dir, s in [0, 1], to the grid box.
  double s0 = 0.0, s1 = 1.0;
  for (int i = 0; i < dim; ++i) {
    const double hi = grid.dims()[i];
    if (std::abs(dir[i]) < 1e-15) {
      if (ua[i] < lo[i] || ua[i] > hi) return false;
      continue;
    }
    double ta = (lo[i] - ua[i]) / dir[i];
    double tb = (hi - ua[i]) / dir[i];
    if (ta > tb) std::swap(ta, tb);
    s0 = std::max(s0, ta);
    s1 = std::min(s1, tb);
    if (s0 > s1) return false;
  }

  Vec3i cell(0, 0, 0);
  int step[3] = {0, 0, 0};
  double t_max[3], t_delta[3];
  for (int i = 0; i < dim; ++i) {
    const double pos = ua[i] + s0 * dir[i];
    int c = static_cast<int>(std::floor(pos));
    c = std::clamp(c, 0, grid.dims()[i] - 1);
    cell[i] = c;
    if (dir[i] > 0.0) {
      step[i] = 1;
      t_max[i] = (c + 1 - ua[i]) / dir[i];
      t_delta[i] = 1.0 / dir[i];
    } else if (dir[i] < 0.0) {
      step[i] = -1;
      t_max[i] = (c - ua[i]) / dir[i];
      t_delta[i] = -1.0 / dir[i];
    } else {
      t_max[i] = std::numeric_limits<double>::infinity();
      t_delta[i] = std::numeric_limits<double>::infinity();
    }
  }
  if (grid.occupied(cell)) return true;
  while (true) {
    int axis = 0;
    for (int i = 1; i < dim; ++i)
      if (t_max[i] < t_max[axis]) axis = i;
    if (t_max[axis] > s1) return false;
    cell[axis] += step[axis];
    if (cell[axis] < 0 || cell[axis] >= grid.dims()[axis]) return false;
    if (grid.occupied(cell)) return true;
    t_max[axis] += t_delta[axis];
  }
}

namespace {

using Key = std::array<std::int64_t, 7>;

struct KeyHash {
  std::size_t operator()(const Key& k) const {
    std::size_t seed = 0;
    for (auto v : k) seed ^= std::hash<std::int64_t>()(v) + 0x9e3779b9 + (seed << 6) + (seed >> 2);
    return seed;
  }
};

struct Node {
  std::array<int, 3> lattice_p;  // position offset in units of a*tau^2/2
  std::array<int, 3> lattice_v;  // velocity offset in units of a*tau
  int depth;
  Vec3 p;
  Vec3 v;
  Vec3 u;
  double g;
  double f;
  int parent;
  Key key;
  bool closed = false;
};

struct OpenEntry {
  double f;
  Key key;
  int index;
};

struct OpenCompare {
  bool operator()(const OpenEntry& a, const OpenEntry& b) const {
    if (a.f != b.f) return a.f > b.f;
    if (a.key != b.key) return a.key > b.key;
    return a.index > b.index;
  }
};

std::int64_t cell_index(double v, double res) {
  return static_cast<std::int64_t>(std::floor(v / res));
}

}  // namespace

SearchResult search(const SearchStart& start, const TargetFunction& target,
                    const OccupancyGrid& grid, const EsdfField& field,
                    const DynamicLimits& limits, const SearchConfig& config,
                    const ExpansionObserver& observer) {
  config.validate();
  const int dim = grid.planar() ? 2 : 3;
  const double accel =
      config.accel_per_axis > 0.0 ? config.accel_per_axis : limits.a_m / std::sqrt(double(dim));
  const double tau = config.tau;
  const double half_step = 0.5 * accel * tau * tau;
  const double vel_step = accel * tau;
  const int goal_depth = static_cast<int>(std::lround(config.horizon / tau));
  const double safe_clearance = 0.5 * limits.d_thr;

  const Vec3 box_lo = grid.origin(), box_hi = grid.max_corner();
  auto in_box = [&](const Vec3& p) {
    for (int i = 0; i < dim; ++i)
      if (p[i] < box_lo[i] || p[i] > box_hi[i]) return false;
    return true;
  };

  if (!in_box(start.p) || grid.occupied_at(start.p))
    throw SearchError(SearchError::Kind::kInvalidStart, "search: start state is in collision or off the map");

  const Vec3 c_goal = target(goal_depth * tau);
  const double reach_speed = limits.v_m + config.target_speed_bound;

  // Admissible estimate of the remaining cost: the remaining time is fixed by
  // the goal depth, and the effort is bounded below by the minimum-energy
  // double-integrator transfer of the drift miss distance to the annulus.
  auto heuristic = [&](const Vec3& p, const Vec3& v, int depth, bool* reachable) {
    const double remaining = (goal_depth - depth) * tau;
    const Vec3 drift = p + v * remaining;
    const double dist = (drift - c_goal).norm();
    const double miss = std::max({0.0, dist - (config.standoff + config.goal_tolerance),
                                  (config.standoff - config.goal_tolerance) - dist});
    const double gap = (p - target(depth * tau)).norm() - (config.standoff + config.goal_tolerance);
    *reachable = gap <= reach_speed * remaining + 1e-9;
    if (remaining <= 0.0) {
      *reachable = *reachable && miss <= 1e-12;
      return 0.0;
    }
    return remaining + config.effort_weight * 3.0 * miss * miss / (remaining * remaining * remaining);
  };

  auto make_key = [&](const Node& n) {
    Key k{};
    if (config.prune_resolution > 0.0) {
      for (int i = 0; i < 3; ++i) {
        k[i] = cell_index(n.p[i], config.prune_resolution);
        k[3 + i] = cell_index(n.v[i], config.velocity_resolution);
      }
    } else {
      for (int i = 0; i < 3; ++i) {
        k[i] = n.lattice_p[i];
        k[3 + i] = n.lattice_v[i];
      }
    }
    k[6] = n.depth;
    return k;
  };

  std::vector<Node> pool;
  pool.reserve(4096);
  std::unordered_map<Key, int, KeyHash> best;
  std::priority_queue<OpenEntry, std::vector<OpenEntry>, OpenCompare> open;

  {
    Node s;
    s.lattice_p = {0, 0, 0};
    s.lattice_v = {0, 0, 0};
    s.depth = 0;
    s.p = start.p;
    s.v = start.v;
    s.u = Vec3::Zero();
    s.g = 0.0;
    bool reachable = true;
    s.f = config.heuristic_weight * heuristic(s.p, s.v, 0, &reachable);
    s.parent = -1;
    s.key = make_key(s);
    pool.push_back(s);
    best[s.key] = 0;
    open.push({s.f, s.key, 0});
  }

  // Accelerations per axis: {-a, 0, +a}; planar searches keep u_z = 0.
  std::vector<std::array<int, 3>> controls;
  for (int sx = -1; sx <= 1; ++sx)
    for (int sy = -1; sy <= 1; ++sy)
      for (int sz = (dim == 3 ? -1 : 0); sz <= (dim == 3 ? 1 : 0); ++sz)
        controls.push_back({sx, sy, sz});

  const int samples = std::max(config.collision_samples,
                               static_cast<int>(std::ceil(limits.v_m * tau / (0.5 * grid.resolution()))));
  int expansions = 0;
  while (!open.empty()) {
    const OpenEntry top = open.top();
    open.pop();
    Node& cur_ref = pool[top.index];
    if (cur_ref.closed || best[cur_ref.key] != top.index) continue;
    cur_ref.closed = true;
    const Node cur = cur_ref;

    if (cur.depth == goal_depth) {
      const double dist = (cur.p - target(cur.depth * tau)).norm();
      if (std::abs(dist - config.standoff) <= config.goal_tolerance) {
        SearchResult result;
        result.cost = cur.g;
        result.expansions = expansions;
        for (int i = top.index; i >= 0; i = pool[i].parent) {
          const Node& n = pool[i];
          result.nodes.push_back({n.p, n.v, n.depth * tau, n.g, n.u});
        }
        std::reverse(result.nodes.begin(), result.nodes.end());
        return result;
      }
      continue;
    }
    if (expansions >= config.max_expansions) break;
    ++expansions;
    if (observer) observer({cur.p, cur.v, cur.depth * tau, cur.g, cur.u}, top.f);

    for (const auto& ctl : controls) {
      Node nx;
      nx.depth = cur.depth + 1;
      const double t_next = nx.depth * tau;
      Vec3 u = Vec3::Zero();
      for (int i = 0; i < 3; ++i) {
        nx.lattice_v[i] = cur.lattice_v[i] + ctl[i];
        nx.lattice_p[i] = cur.lattice_p[i] + 2 * cur.lattice_v[i] + ctl[i];
        u[i] = ctl[i] * accel;
      }
      // Exact lattice state, no accumulated rounding.
      for (int i = 0; i < 3; ++i) {
        nx.v[i] = start.v[i] + vel_step * nx.lattice_v[i];
        nx.p[i] = start.p[i] + start.v[i] * t_next + half_step * nx.lattice_p[i];
      }
      if (nx.v.norm() > limits.v_m + 1e-9) continue;
      if (!in_box(nx.p)) continue;

      bool safe = true;
      for (int j = 1; j <= samples && safe; ++j) {
        const double s = tau * j / samples;
        const Vec3 ps = cur.p + cur.v * s + 0.5 * u * s * s;
        safe = in_box(ps) && field.sample_distance(ps) > safe_clearance;
      }
      if (!safe) continue;
      if (config.check_occlusion && raycast_occluded(grid, nx.p, target(t_next))) continue;

      bool reachable = true;
      const double h = heuristic(nx.p, nx.v, nx.depth, &reachable);
      if (!reachable) continue;
      nx.u = u;
      const double deviation = (nx.p - target(t_next)).norm() - config.standoff;
      nx.g = cur.g + tau + config.effort_weight * u.squaredNorm() * tau +
             config.standoff_weight * deviation * deviation * tau;
      nx.f = nx.g + config.heuristic_weight * h;
      nx.parent = top.index;
      nx.key = make_key(nx);

      auto it = best.find(nx.key);
      if (it != best.end() && pool[it->second].g <= nx.g + 1e-12) continue;
      const int idx = static_cast<int>(pool.size());
      pool.push_back(nx);
      if (it != best.end())
        it->second = idx;
      else
        best.emplace(nx.key, idx);
      open.push({nx.f, nx.key, idx});
    }
  }
  throw SearchError(SearchError::Kind::kExhausted, "search: no occlusion-free path within the expansion budget");
}

}  // namespace visiplan
