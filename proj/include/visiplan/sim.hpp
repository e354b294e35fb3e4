#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "visiplan/planner.hpp"
#include "visiplan/world.hpp"

namespace visiplan {

struct MapSpec {
  enum class Kind { kFile, kEmpty, kForest };
  Kind kind = Kind::kEmpty;
  /// Resolved path for kFile; ASCII rasters use resolution/origin below.
  std::string file;
  double resolution = 0.1;
  Vec3 origin = Vec3::Zero();
  /// Extent of an empty planar map (x, y).
  Vec3 size = Vec3(20.0, 20.0, 0.0);
  /// Forest parameters; seed and keep-clear points come from the scenario.
  ForestSpec forest;
};

struct TargetSpec {
  enum class Kind { kStatic, kWaypoints, kTimed, kRandom };
  Kind kind = Kind::kStatic;
  Vec3 start = Vec3::Zero();
  std::vector<Vec3> waypoints;
  std::vector<double> times;
  double speed = 1.5;
  int smoothing = 2;
  double start_delay = 0.0;
  /// Random-walk parameters; the seed comes from the scenario.
  RandomTargetSpec random;
};

/// Planner defaults for simulation: the optimizer runs without a wall-clock
/// budget (iteration cap only) so runs are reproducible.
PlannerConfig simulation_planner_defaults();

struct Scenario {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  MapSpec map;
  Vec3 robot_start = Vec3::Zero();
  double robot_yaw = 0.0;
  TargetSpec target;
  /// FOV half-angles (rad).
  double fov_half_horizontal = 40.0 * kPi / 180.0;
  double fov_half_vertical = 32.5 * kPi / 180.0;
  double replan_period = 0.1;
  double sim_step = 0.05;
  double duration = 30.0;
  /// End the run at the first loss of the target. When false the run
  /// continues (failure time stays latched) so every occlusion is counted.
  bool stop_on_failure = true;
  /// Standard deviation of Gaussian noise added to the robot position (m).
  double pose_noise = 0.0;
  PlannerConfig planner = simulation_planner_defaults();

  void validate() const;
};

struct World {
  OccupancyGrid grid;
  EsdfField field;
  TargetMotion target;
};

/// Loads or generates the map and target motion of a scenario.
World build_world(const Scenario& scenario);

struct Pose {
  Vec3 p = Vec3::Zero();
  double yaw = 0.0;
};

struct FovCheck {
  double bearing = 0.0;
  double elevation = 0.0;
  bool in_cone = false;
  bool occluded = false;
  bool visible() const { return in_cone && !occluded; }
};

/// Cone membership around the yaw axis plus a segment raycast.
FovCheck check_fov(const Pose& robot, const Vec3& target, double half_horizontal,
                   double half_vertical, const OccupancyGrid& grid);
bool in_fov(const Pose& robot, const Vec3& target, double half_horizontal, double half_vertical,
            const OccupancyGrid& grid);

struct StepRecord {
  double t = 0.0;
  Pose robot;
  Vec3 target = Vec3::Zero();
  double psi_err = 0.0;
  bool in_cone = false;
  bool occluded = false;
  bool in_fov = false;
  /// Robot-target distance.
  double distance = 0.0;
  /// Robot obstacle clearance from the ESDF.
  double clearance = 0.0;
};

/// Robot-centred, yaw-aligned histogram of tracked target positions. Targets
/// beyond the window are counted in the nearest edge bin.
struct HeatMap {
  double bin = 0.25;
  double half_extent = 4.0;
  int bins_per_axis() const { return static_cast<int>(std::lround(2.0 * half_extent / bin)); }
  /// Row-major [iy][ix], x forward, y left.
  std::vector<long> counts;
  long total() const;
  void add(const Vec3& relative_body);
};

enum class RunTermination { kCompleted, kTargetLost, kPlannerFailure };
std::string_view termination_name(RunTermination t);

struct RunReport {
  std::string scenario;
  PlannerMode mode = PlannerMode::kVisibility;
  std::uint64_t seed = 0;
  double duration = 0.0;
  std::vector<StepRecord> steps;
  bool failed = false;
  /// First loss of the target; equals the duration when it was never lost.
  double failure_time = 0.0;
  std::string failure_cause;
  RunTermination termination = RunTermination::kCompleted;
  int occlusion_events = 0;
  int fov_exit_events = 0;
  double mean_psi_err = 0.0;
  double max_psi_err = 0.0;
  double min_distance = 0.0;
  double max_distance = 0.0;
  double min_clearance = 0.0;
  int replans = 0;
  int search_failures = 0;
  int numeric_failures = 0;
  HeatMap heatmap;
};

struct SimObserver {
  std::function<void(int replan, double t, const ReplanResult&)> on_replan;
  std::function<void(int replan, const PathNode&, double f_score)> on_expansion;
  std::function<void(int replan, int iteration, const CostReport&)> on_iteration;
};

/// Runs the closed tracking loop. Deterministic for a given scenario.
RunReport run(const Scenario& scenario, const SimObserver& observer = {});
RunReport run(const Scenario& scenario, const World& world, const SimObserver& observer = {});

}  // namespace visiplan
