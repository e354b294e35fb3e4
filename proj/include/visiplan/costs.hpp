#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "visiplan/common.hpp"
#include "visiplan/env.hpp"
#include "visiplan/spline.hpp"

namespace visiplan {

/// Observation-quality knobs: distance band, confident-FOV slope and ball count.
struct VisibilityParams {
  double od_min = 2.5;
  double od_max = 3.5;
  double rho = 0.8;
  int m_balls = 10;

  void validate() const;
};

struct CostWeights {
  double w_do = 0.0;
  double w_ao = 0.0;
  double w_oe = 0.0;
  double w_f = 0.0;
  double w_f_phi = 0.0;
  double w_s = 0.0;
  double w_s_phi = 0.0;
  double w_c = 0.0;
  double w_v = 0.0;

  void validate() const;
  /// Default weighting used by the tracking planner.
  static CostWeights tracking_defaults();
};

struct DynamicLimits {
  double v_m = 5.0;
  double a_m = 4.0;
  double v_phi_m = 2.5;
  double a_phi_m = 6.0;
  double d_thr = 0.5;
  double psi_thr = 0.8;

  void validate() const;
};

/// Predicted target position c_k for every waypoint k = 1..N-2 (stored
/// 0-based: c[k-1]).
struct TargetTrack {
  std::vector<Vec3> c;
  /// Set when some positions come from the constant-velocity tail beyond the
  /// predictor's validity horizon.
  bool extrapolated = false;
};

enum class CostTerm : int {
  kDistance = 0,     // J_DO
  kAngle,            // J_AO
  kOcclusion,        // J_OE
  kFeasibility,      // J_f
  kYawFeasibility,   // J_f_phi
  kSmoothness,       // J_s
  kYawSmoothness,    // J_s_phi
  kCollision,        // J_c
  kSafeTracking,     // J_v
};
inline constexpr int kCostTermCount = 9;

/// Stable identifier used in JSON/CSV output ("do", "ao", ...).
std::string_view term_name(CostTerm term);
double term_weight(const CostWeights& w, CostTerm term);

/// Value and gradient of a single term w.r.t. every control point.
struct TermResult {
  double value = 0.0;
  std::vector<Vec3> grad_q;
  std::vector<double> grad_phi;

  explicit TermResult(int n = 0) : grad_q(n, Vec3::Zero()), grad_phi(n, 0.0) {}
};

struct CostReport {
  std::array<double, kCostTermCount> terms{};
  double total = 0.0;
  std::vector<Vec3> grad_q;
  std::vector<double> grad_phi;

  double term(CostTerm t) const { return terms[static_cast<int>(t)]; }
};

struct CostOptions {
  /// Use the yaw that points from target to robot instead of robot to target.
  bool ao_sign_as_printed = false;
  /// Multiply each collision penalty by the clearance itself.
  bool collision_trailing_factor = false;
  /// Leading control points held fixed as boundary conditions (zero gradient).
  int fixed_control_points = 3;
};

struct CostModel {
  VisibilityParams visibility;
  CostWeights weights;
  DynamicLimits limits;
  CostOptions options;
};

/// C^2 hinge max(0, x)^3.
inline double penalty(double x) { return x > 0.0 ? x * x * x : 0.0; }
inline double penalty_derivative(double x) { return x > 0.0 ? 3.0 * x * x : 0.0; }

/// Yaw that points the sensor axis from p towards c. Throws
/// DegenerateGeometry when p and c coincide horizontally.
double best_yaw(const Vec3& p, const Vec3& c, bool as_printed = false);

TermResult cost_do(const TrajectoryBSpline& traj, const TargetTrack& target,
                   const VisibilityParams& params);
TermResult cost_ao(const TrajectoryBSpline& traj, const TargetTrack& target,
                   bool as_printed = false);
TermResult cost_oe(const TrajectoryBSpline& traj, const TargetTrack& target,
                   const VisibilityParams& params, const EsdfField& field);
TermResult cost_feasibility(const TrajectoryBSpline& traj, const DynamicLimits& limits);
TermResult cost_yaw_feasibility(const TrajectoryBSpline& traj, const DynamicLimits& limits);
TermResult cost_smoothness(const TrajectoryBSpline& traj);
TermResult cost_yaw_smoothness(const TrajectoryBSpline& traj);
TermResult cost_collision(const TrajectoryBSpline& traj, const DynamicLimits& limits,
                          const EsdfField& field, bool trailing_factor = false);
TermResult cost_safe_tracking(const TrajectoryBSpline& traj, const DynamicLimits& limits);

/// Evaluates one term by id.
TermResult evaluate_term(CostTerm term, const TrajectoryBSpline& traj, const TargetTrack& target,
                         const EsdfField& field, const CostModel& model);

/// Weighted sum of all terms. Gradients of the fixed leading control points
/// are zeroed. Throws NumericError naming the first term with a non-finite
/// value or gradient.
CostReport total_cost(const TrajectoryBSpline& traj, const TargetTrack& target,
                      const EsdfField& field, const CostModel& model);

}  // namespace visiplan
