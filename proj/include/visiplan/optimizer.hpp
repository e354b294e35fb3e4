#pragma once

#include <functional>
#include <string_view>

#include "visiplan/costs.hpp"

namespace visiplan {

struct OptimizerConfig {
  int max_iterations = 200;
  /// Stop when the max-norm of the (scaled) gradient falls below this.
  double gradient_tolerance = 1e-5;
  /// Stop when an accepted step lowers the cost by less than this fraction.
  double relative_cost_tolerance = 1e-8;
  int history_size = 8;
  int max_line_search_steps = 30;
  /// Seconds; values <= 0 or infinity disable the wall-clock limit.
  double wall_clock_budget = 0.05;
  /// Strong Wolfe constants: sufficient decrease and curvature.
  double armijo = 1e-4;
  double curvature = 0.9;
  /// On planar fields keep every control point's z fixed; nothing in a 2-D
  /// map constrains altitude, so the visibility terms would otherwise trade
  /// it freely.
  bool planar_altitude_lock = true;

  void validate() const;
};

enum class Termination { kConverged, kMaxIterations, kBudgetExhausted, kLineSearchFailure };
std::string_view termination_name(Termination t);

struct OptimizeResult {
  TrajectoryBSpline trajectory;
  CostReport final_report;
  int iterations = 0;
  Termination termination = Termination::kConverged;
  /// Decision-vector scale applied to yaw control points (metres per radian).
  double yaw_scale = 1.0;
};

/// Called after every accepted iterate (iteration 0 is the initial point).
using IterationObserver = std::function<void(int iteration, const CostReport& report)>;

/// Limited-memory quasi-Newton minimization of total_cost over the free
/// (non-boundary) position and yaw control points, jointly.
///
/// The accepted cost sequence is non-increasing and the fixed control points
/// are returned bit-identical. A failed line search returns the best iterate
/// found; a non-finite cost term throws NumericError.
OptimizeResult optimize(const TrajectoryBSpline& initial, const TargetTrack& target,
                        const EsdfField& field, const CostModel& model,
                        const OptimizerConfig& config, const IterationObserver& observer = {});

}  // namespace visiplan
