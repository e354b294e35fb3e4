#include "visiplan/planner.hpp"

#include <algorithm>
#include <cmath>

namespace visiplan {

std::string_view mode_name(PlannerMode mode) {
  return mode == PlannerMode::kVisibility ? "visibility" : "baseline";
}

PlannerMode parse_mode(std::string_view text) {
  if (text == "visibility") return PlannerMode::kVisibility;
  if (text == "baseline") return PlannerMode::kBaseline;
  throw ConfigError("mode: expected 'visibility' or 'baseline', got '" + std::string(text) + "'");
}

void PlannerConfig::validate() const {
  if (control_points < 5) throw ConfigError("planner: control_points must be >= 5");
  if (!(dt > 0.0)) throw ConfigError("planner: dt must be positive");
  model.visibility.validate();
  model.weights.validate();
  model.limits.validate();
  search.validate();
  optimizer.validate();
  prediction.validate();
}

PlannerConfig PlannerConfig::effective() const {
  PlannerConfig out = *this;
  out.search.horizon = horizon();
  if (mode == PlannerMode::kBaseline) {
    out.model.weights.w_do = 0.0;
    out.model.weights.w_ao = 0.0;
    out.model.weights.w_oe = 0.0;
    out.model.weights.w_v = 0.0;
    out.search.check_occlusion = false;
  }
  return out;
}

TrackingPlanner::TrackingPlanner(const OccupancyGrid& grid, const EsdfField& field,
                                 PlannerConfig config)
    : grid_(grid), field_(field), config_(config.effective()) {
  config_.validate();
}

namespace {

Vec3 interpolate(const std::vector<TimedPoint>& path, double t) {
  if (t <= path.front().t) return path.front().p;
  if (t >= path.back().t) return path.back().p;
  const auto it = std::upper_bound(path.begin(), path.end(), t,
                                   [](double v, const TimedPoint& p) { return v < p.t; });
  const TimedPoint& b = *it;
  const TimedPoint& a = *(it - 1);
  const double w = (t - a.t) / (b.t - a.t);
  return (1.0 - w) * a.p + w * b.p;
}

}  // namespace

ReplanResult TrackingPlanner::replan(double now, const TrajectoryState& current,
                                     const std::vector<TargetObservation>& history,
                                     const TrajectoryBSpline* committed, double committed_start,
                                     const ReplanObserver& observer) const {
  const PlannerConfig& cfg = config_;
  const PredictionModel prediction = fit(history, cfg.prediction);
  const auto target_at = [&](double tau) { return prediction.position(now + tau); };

  ReplanResult result;
  ReplanDiagnostics& diag = result.diagnostics;
  std::vector<TimedPoint> path;
  try {
    const SearchResult found = search(SearchStart{current.p, current.v}, target_at, grid_, field_,
                                      cfg.model.limits, cfg.search, observer.on_expansion);
    diag.search_ok = true;
    diag.search_expansions = found.expansions;
    path = found.timed_path();
  } catch (const SearchError& e) {
    const double offset = now - committed_start;
    if (!committed || offset >= committed->duration() - 1e-9)
      throw PlannerFailure(std::string("planner failure: ") + e.what());
    diag.used_fallback = true;
    const double remaining = committed->duration() - offset;
    const int count = std::max(1, static_cast<int>(std::ceil(remaining / cfg.dt)));
    for (int i = 0; i <= count; ++i) {
      const double tau = std::min(remaining, i * remaining / count);
      path.push_back({tau, evaluate(*committed, offset + tau).p});
    }
  }

  YawReference yaw_reference;
  if (cfg.mode == PlannerMode::kVisibility) {
    // Face the predicted target along the seed path; keep the last good yaw
    // where the bearing is undefined.
    yaw_reference = [&, last = current.psi](double tau) mutable {
      try {
        last = best_yaw(interpolate(path, tau), target_at(tau), cfg.model.options.ao_sign_as_printed);
      } catch (const DegenerateGeometry&) {
      }
      return last;
    };
  }
  const TrajectoryBSpline seed =
      initialize_from_path(path, current, cfg.dt, cfg.control_points, yaw_reference);

  std::vector<double> times;
  for (int k = 1; k <= seed.waypoint_count(); ++k) times.push_back(now + (k - 1) * cfg.dt);
  const TargetTrack track = predict_track(prediction, times);
  diag.prediction_extrapolated = track.extrapolated;
  diag.seed = seed;
  diag.track = track;

  try {
    OptimizeResult opt = optimize(seed, track, field_, cfg.model, cfg.optimizer, observer.on_iteration);
    diag.iterations = opt.iterations;
    diag.termination = opt.termination;
    diag.report = std::move(opt.final_report);
    result.trajectory = std::move(opt.trajectory);
  } catch (const NumericError&) {
    diag.numeric_failure = true;
    result.trajectory = seed;
  }
  return result;
}

}  // namespace visiplan
