#pragma once

#include <functional>
#include <vector>

#include "visiplan/costs.hpp"
#include "visiplan/env.hpp"
#include "visiplan/spline.hpp"

namespace visiplan {

/// Kinodynamic front-end parameters.
struct SearchConfig {
  /// Primitive duration (s).
  double tau = 0.2;
  /// Per-axis acceleration magnitude of the {-a, 0, +a} primitive set; 0
  /// selects a_m / sqrt(dimension) so every primitive respects ||u|| <= a_m.
  double accel_per_axis = 0.0;
  /// Position / velocity pruning cells; prune_resolution 0 keys nodes on the
  /// exact primitive lattice instead.
  double prune_resolution = 0.2;
  double velocity_resolution = 0.5;
  double heuristic_weight = 1.2;
  int max_expansions = 20000;
  /// Goal annulus around the predicted target at the horizon.
  double standoff = 3.0;
  double goal_tolerance = 0.5;
  double horizon = 3.0;
  /// Minimum number of collision samples per primitive.
  int collision_samples = 5;
  bool check_occlusion = true;
  /// Weight on integrated squared acceleration in the path cost.
  double effort_weight = 0.05;
  /// Weight on integrated squared deviation from the standoff distance to
  /// the predicted target. Keeps intermediate nodes from cutting through or
  /// past the target on the way to the goal annulus.
  double standoff_weight = 0.5;
  /// Upper bound on the target's speed, used to prune unreachable nodes.
  double target_speed_bound = 2.5;

  void validate() const;
};

struct SearchStart {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
};

struct PathNode {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  double t = 0.0;
  double cost = 0.0;
  /// Acceleration of the primitive that reached this node (zero at start).
  Vec3 u = Vec3::Zero();
};

struct SearchResult {
  std::vector<PathNode> nodes;
  double cost = 0.0;
  int expansions = 0;

  std::vector<TimedPoint> timed_path() const;
};

class SearchError : public Error {
 public:
  enum class Kind { kExhausted, kInvalidStart };
  SearchError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Predicted target position at time t from the search start.
using TargetFunction = std::function<Vec3(double t)>;
/// Receives every expanded node (for tracing).
using ExpansionObserver = std::function<void(const PathNode& node, double f_score)>;

/// Hybrid-state A* over constant-acceleration primitives. Every node after
/// the start is collision-free along its primitive, within the velocity
/// bound, and (when enabled) has an unoccluded line of sight to the predicted
/// target at its time stamp. Throws SearchError.
SearchResult search(const SearchStart& start, const TargetFunction& target,
                    const OccupancyGrid& grid, const EsdfField& field,
                    const DynamicLimits& limits, const SearchConfig& config,
                    const ExpansionObserver& observer = {});

/// Exact voxel traversal: true iff segment a-b passes through an occupied
/// cell. Planar grids ignore z.
bool raycast_occluded(const OccupancyGrid& grid, const Vec3& a, const Vec3& b);

}  // namespace visiplan
