#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "visiplan/costs.hpp"
#include "visiplan/env.hpp"
#include "visiplan/optimizer.hpp"
#include "visiplan/predict.hpp"
#include "visiplan/search.hpp"
#include "visiplan/spline.hpp"

namespace visiplan {

enum class PlannerMode { kVisibility, kBaseline };
std::string_view mode_name(PlannerMode mode);
/// Throws ConfigError for anything but "visibility" / "baseline".
PlannerMode parse_mode(std::string_view text);

struct PlannerConfig {
  int control_points = 33;
  double dt = 0.1;
  PlannerMode mode = PlannerMode::kVisibility;
  CostModel model{VisibilityParams{}, CostWeights::tracking_defaults(), DynamicLimits{}, CostOptions{}};
  SearchConfig search;
  OptimizerConfig optimizer;
  PredictionConfig prediction;

  void validate() const;
  double horizon() const { return (control_points - 3) * dt; }
  /// Copy with the mode's overrides applied: baseline zeroes the visibility
  /// weights and turns off the front-end line-of-sight check.
  PlannerConfig effective() const;
};

struct ReplanDiagnostics {
  bool search_ok = false;
  int search_expansions = 0;
  /// Search failed and the committed trajectory seeded the optimizer.
  bool used_fallback = false;
  /// Optimizer hit a non-finite cost; the seed trajectory was kept.
  bool numeric_failure = false;
  int iterations = 0;
  Termination termination = Termination::kConverged;
  CostReport report;
  bool prediction_extrapolated = false;
  /// Optimizer input and the predicted target it was scored against.
  TrajectoryBSpline seed;
  TargetTrack track;
};

struct ReplanResult {
  TrajectoryBSpline trajectory;
  ReplanDiagnostics diagnostics;
};

/// Optional per-replan tracing hooks.
struct ReplanObserver {
  ExpansionObserver on_expansion;
  IterationObserver on_iteration;
};

class PlannerFailure : public Error {
 public:
  using Error::Error;
};

/// Receding-horizon tracker: predict the target, search a visible
/// kinodynamic path, seed a spline from it and optimize position and yaw.
class TrackingPlanner {
 public:
  TrackingPlanner(const OccupancyGrid& grid, const EsdfField& field, PlannerConfig config);

  /// Plans from `current` at absolute time `now`. `committed` is the
  /// trajectory being flown, started at `committed_start`; it seeds the
  /// optimizer when the search fails. Throws PlannerFailure when neither the
  /// search nor a committed remainder is available.
  ReplanResult replan(double now, const TrajectoryState& current,
                      const std::vector<TargetObservation>& history,
                      const TrajectoryBSpline* committed = nullptr, double committed_start = 0.0,
                      const ReplanObserver& observer = {}) const;

  const PlannerConfig& config() const { return config_; }

 private:
  const OccupancyGrid& grid_;
  const EsdfField& field_;
  PlannerConfig config_;
};

}  // namespace visiplan
