#pragma once

#include <cstdint>
#include <vector>

#include "visiplan/common.hpp"
#include "visiplan/env.hpp"

namespace visiplan {

/// Small deterministic generator (splitmix64) so generated worlds are
/// identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal (Box-Muller).
  double normal();

 private:
  std::uint64_t state_;
};

struct ForestSpec {
  std::uint64_t seed = 1;
  /// Planar area [min, max] in x/y; z is ignored.
  Vec3 area_min = Vec3(0.0, 0.0, 0.0);
  Vec3 area_max = Vec3(20.0, 20.0, 0.0);
  int obstacle_count = 30;
  double radius_min = 0.3;
  double radius_max = 0.8;
  double resolution = 0.1;
  /// Points that must keep `clearance` metres to every obstacle surface.
  std::vector<Vec3> keep_clear;
  double clearance = 1.0;
  int max_retries = 1000;
};

struct Cylinder {
  Vec3 center;
  double radius;
};

/// Planar grid with randomly placed vertical cylinders. Deterministic per
/// seed; throws ConfigError when the clearance constraints cannot be met.
OccupancyGrid generate_random_forest(const ForestSpec& spec, std::vector<Cylinder>* placed = nullptr);

/// Time-parameterized target motion along a smoothed polyline at constant
/// speed. Holds the final point after the path ends.
class TargetMotion {
 public:
  TargetMotion() = default;
  /// `corner_smoothing` Chaikin passes are applied before parameterizing.
  TargetMotion(std::vector<Vec3> waypoints, double speed, int corner_smoothing = 2,
               double start_delay = 0.0);
  /// Piecewise-linear motion through `points` reached at strictly increasing
  /// `times` (absolute seconds).
  static TargetMotion timed(std::vector<Vec3> points, std::vector<double> times);

  Vec3 position(double t) const;
  Vec3 velocity(double t) const;
  double duration() const { return start_delay_ + (times_.empty() ? 0.0 : times_.back()); }
  const std::vector<Vec3>& polyline() const { return points_; }

 private:
  std::vector<Vec3> points_;
  std::vector<double> times_;
  double start_delay_ = 0.0;
};

struct RandomTargetSpec {
  std::uint64_t seed = 1;
  double speed = 1.5;
  /// Required obstacle clearance along the target's route.
  double margin = 1.0;
  double min_leg = 5.0;
  double duration = 100.0;
  double start_delay = 0.0;
};

/// Random wandering target: chains grid shortest paths between random free
/// goals until the route covers speed * duration. Throws ConfigError if the
/// start has no reachable goals.
TargetMotion random_target_motion(const OccupancyGrid& grid, const EsdfField& field,
                                  const Vec3& start, const RandomTargetSpec& spec);

}  // namespace visiplan
