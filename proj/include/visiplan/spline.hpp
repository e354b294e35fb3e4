#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "visiplan/common.hpp"

namespace visiplan {

/// Uniform unclamped cubic B-spline over position and yaw.
///
/// With N = q.size() control points the curve is defined on
/// [0, (N - 3) * dt]. Yaw control points are stored unwrapped.
///
/// Indexing: waypoint k (1-based, k = 1..N-2) is the knot value at
/// t = (k - 1) * dt and combines control points k-1, k, k+1 (0-based).
struct TrajectoryBSpline {
  static constexpr int kDegree = 3;

  double dt = 0.1;
  std::vector<Vec3> q;
  std::vector<double> phi;

  int size() const { return static_cast<int>(q.size()); }
  double duration() const { return (size() - kDegree) * dt; }
  int waypoint_count() const { return size() - 2; }

  /// Throws ConfigError when sizes or dt are inconsistent.
  void validate() const;
};

struct Waypoint {
  int k = 0;
  Vec3 p = Vec3::Zero();
  double psi = 0.0;
};

/// Full kinematic state of a trajectory at one instant.
struct TrajectoryState {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 a = Vec3::Zero();
  double psi = 0.0;
  double psi_rate = 0.0;
  double psi_acc = 0.0;
};

/// Knot value (Q_{k-1} + 4 Q_k + Q_{k+1}) / 6 for 1-based k in 1..N-2.
Waypoint waypoint(const TrajectoryBSpline& traj, int k);

/// Velocity (order 1), acceleration (2) or jerk (3) control points.
std::vector<Vec3> derivative_control_points(const TrajectoryBSpline& traj, int order);
std::vector<double> yaw_derivative_control_points(const TrajectoryBSpline& traj, int order);

/// Position and yaw at t in [0, duration()].
struct TrajectorySample {
  Vec3 p;
  double psi;
};
TrajectorySample evaluate(const TrajectoryBSpline& traj, double t);
/// Position/yaw and their first two derivatives at t in [0, duration()].
TrajectoryState evaluate_state(const TrajectoryBSpline& traj, double t);

struct TimedPoint {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
};

/// Desired yaw as a function of time from trajectory start (any branch).
using YawReference = std::function<double(double t)>;

/// Seeds a spline from a front-end path.
///
/// The first three control points (position and yaw) reproduce the current
/// state exactly; the rest are a ridge-regularized least-squares fit to the
/// path sampled at knots and half-knots. Without a yaw reference the yaw
/// follows the path heading.
TrajectoryBSpline initialize_from_path(const std::vector<TimedPoint>& path,
                                       const TrajectoryState& current, double dt,
                                       int control_points,
                                       const YawReference& yaw_reference = {},
                                       double ridge = 1e-6);

/// First three control points that reproduce position/velocity/acceleration
/// at t = 0 of a uniform cubic B-spline.
std::array<Vec3, 3> boundary_control_points(const Vec3& p, const Vec3& v, const Vec3& a, double dt);
std::array<double, 3> boundary_control_points(double p, double v, double a, double dt);

/// CSV rows "t,x,y,z,psi,vx,vy,vz,yaw_rate" sampled every 1/rate seconds;
/// psi wrapped to (-pi, pi].
void write_trajectory_csv(std::ostream& out, const TrajectoryBSpline& traj, double rate,
                          double time_offset = 0.0);

}  // namespace visiplan
