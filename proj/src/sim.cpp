#include "visiplan/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace visiplan {

PlannerConfig simulation_planner_defaults() {
  PlannerConfig config;
  config.optimizer.wall_clock_budget = 0.0;
  return config;
}

void Scenario::validate() const {
  auto half_angle_ok = [](double a) { return a > 0.0 && a < kPi / 2.0; };
  if (!half_angle_ok(fov_half_horizontal) || !half_angle_ok(fov_half_vertical))
    throw ConfigError("scenario: FOV half-angles must lie in (0, pi/2)");
  if (!(sim_step > 0.0)) throw ConfigError("scenario: sim_step must be positive");
  if (!(replan_period >= sim_step)) throw ConfigError("scenario: replan_period must be >= sim_step");
  const double ratio = replan_period / sim_step;
  if (std::abs(ratio - std::round(ratio)) > 1e-6)
    throw ConfigError("scenario: replan_period must be a multiple of sim_step");
  if (!(duration > 0.0)) throw ConfigError("scenario: duration must be positive");
  if (!(pose_noise >= 0.0)) throw ConfigError("scenario: pose_noise must be >= 0");
  const double budget = planner.optimizer.wall_clock_budget;
  if (budget > 0.0 && std::isfinite(budget) && replan_period < budget)
    throw ConfigError("scenario: replan_period must be >= the optimizer budget");
  if (!(replan_period <= planner.horizon()))
    throw ConfigError("scenario: replan_period exceeds the planning horizon");
  planner.validate();
}

namespace {

// Decorrelates the sub-streams derived from one scenario seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  Rng rng(seed ^ (0x632be59bd9b4e019ULL * (stream + 1)));
  return rng.next();
}

}  // namespace

World build_world(const Scenario& scenario) {
  World world;
  switch (scenario.map.kind) {
    case MapSpec::Kind::kFile:
      world.grid = load_grid(scenario.map.file, scenario.map.resolution, scenario.map.origin);
      break;
    case MapSpec::Kind::kEmpty: {
      const MapSpec& m = scenario.map;
      if (!(m.resolution > 0.0 && m.size.x() > 0.0 && m.size.y() > 0.0))
        throw ConfigError("map: empty map needs positive resolution and size");
      const Vec3i dims(static_cast<int>(std::ceil(m.size.x() / m.resolution - 1e-9)),
                       static_cast<int>(std::ceil(m.size.y() / m.resolution - 1e-9)), 1);
      world.grid = OccupancyGrid(m.resolution, m.origin, dims);
      break;
    }
    case MapSpec::Kind::kForest: {
      ForestSpec spec = scenario.map.forest;
      spec.seed = derive_seed(scenario.seed, 0);
      spec.keep_clear.push_back(scenario.robot_start);
      spec.keep_clear.push_back(scenario.target.start);
      world.grid = generate_random_forest(spec);
      break;
    }
  }
  world.field = build_esdf(world.grid);

  const TargetSpec& t = scenario.target;
  switch (t.kind) {
    case TargetSpec::Kind::kStatic:
      world.target = TargetMotion({t.start}, 1.0, 0);
      break;
    case TargetSpec::Kind::kWaypoints: {
      std::vector<Vec3> pts{t.start};
      pts.insert(pts.end(), t.waypoints.begin(), t.waypoints.end());
      world.target = TargetMotion(std::move(pts), t.speed, t.smoothing, t.start_delay);
      break;
    }
    case TargetSpec::Kind::kTimed:
      world.target = TargetMotion::timed(t.waypoints, t.times);
      break;
    case TargetSpec::Kind::kRandom: {
      RandomTargetSpec spec = t.random;
      spec.seed = derive_seed(scenario.seed, 1);
      spec.speed = t.speed;
      spec.start_delay = t.start_delay;
      world.target = random_target_motion(world.grid, world.field, t.start, spec);
      break;
    }
  }
  return world;
}

FovCheck check_fov(const Pose& robot, const Vec3& target, double half_horizontal,
                   double half_vertical, const OccupancyGrid& grid) {
  FovCheck out;
  const Vec3 r = target - robot.p;
  const double horizontal = r.head<2>().norm();
  out.bearing = horizontal > 0.0 ? wrap_angle(std::atan2(r.y(), r.x()) - robot.yaw) : 0.0;
  out.elevation = std::atan2(r.z(), horizontal);
  out.in_cone = std::abs(out.bearing) <= half_horizontal && std::abs(out.elevation) <= half_vertical;
  out.occluded = raycast_occluded(grid, robot.p, target);
  return out;
}

bool in_fov(const Pose& robot, const Vec3& target, double half_horizontal, double half_vertical,
            const OccupancyGrid& grid) {
  return check_fov(robot, target, half_horizontal, half_vertical, grid).visible();
}

long HeatMap::total() const {
  long sum = 0;
  for (long c : counts) sum += c;
  return sum;
}

void HeatMap::add(const Vec3& rel) {
  const int n = bins_per_axis();
  if (counts.empty()) counts.assign(static_cast<std::size_t>(n) * n, 0);
  auto index = [&](double v) {
    return std::clamp(static_cast<int>(std::floor((v + half_extent) / bin)), 0, n - 1);
  };
  ++counts[static_cast<std::size_t>(index(rel.y())) * n + index(rel.x())];
}

std::string_view termination_name(RunTermination t) {
  switch (t) {
    case RunTermination::kCompleted: return "completed";
    case RunTermination::kTargetLost: return "target_lost";
    case RunTermination::kPlannerFailure: return "planner_failure";
  }
  return "unknown";
}

RunReport run(const Scenario& scenario, const SimObserver& observer) {
  scenario.validate();
  const World world = build_world(scenario);
  return run(scenario, world, observer);
}

RunReport run(const Scenario& scenario, const World& world, const SimObserver& observer) {
  scenario.validate();
  const TrackingPlanner planner(world.grid, world.field, scenario.planner);
  const PredictionConfig& pred = planner.config().prediction;

  RunReport report;
  report.scenario = scenario.name;
  report.mode = scenario.planner.mode;
  report.seed = scenario.seed;
  report.duration = scenario.duration;
  report.failure_time = scenario.duration;
  report.heatmap.counts.assign(
      static_cast<std::size_t>(report.heatmap.bins_per_axis()) * report.heatmap.bins_per_axis(), 0);

  const int steps = static_cast<int>(std::floor(scenario.duration / scenario.sim_step + 1e-9));
  const int replan_every = static_cast<int>(std::lround(scenario.replan_period / scenario.sim_step));
  Rng noise(derive_seed(scenario.seed, 2));

  TrajectoryBSpline committed;
  double committed_start = 0.0;
  bool have_committed = false;
  std::vector<TargetObservation> history;
  bool was_occluded = false, was_visible = true;
  double psi_sum = 0.0;
  report.min_distance = std::numeric_limits<double>::infinity();
  report.min_clearance = std::numeric_limits<double>::infinity();

  auto lose = [&](double t, const char* cause) {
    if (report.failed) return;
    report.failed = true;
    report.failure_time = t;
    report.failure_cause = cause;
  };

  for (int i = 0; i <= steps; ++i) {
    const double t = i * scenario.sim_step;
    const Vec3 target = world.target.position(t);
    history.push_back({t, target});
    const double keep_from = t - pred.window - scenario.sim_step;
    while (history.size() > 2 && history.front().t < keep_from) history.erase(history.begin());

    TrajectoryState state;
    if (have_committed) {
      state = evaluate_state(committed, std::min(t - committed_start, committed.duration()));
    } else {
      state.p = scenario.robot_start;
      state.psi = scenario.robot_yaw;
    }
    if (scenario.pose_noise > 0.0)
      state.p += scenario.pose_noise * Vec3(noise.normal(), noise.normal(), noise.normal());

    if (i % replan_every == 0) {
      const int index = report.replans++;
      ReplanObserver hooks;
      if (observer.on_expansion)
        hooks.on_expansion = [&](const PathNode& n, double f) { observer.on_expansion(index, n, f); };
      if (observer.on_iteration)
        hooks.on_iteration = [&](int it, const CostReport& r) { observer.on_iteration(index, it, r); };
      try {
        ReplanResult plan = planner.replan(t, state, history, have_committed ? &committed : nullptr,
                                           committed_start, hooks);
        if (!plan.diagnostics.search_ok) ++report.search_failures;
        if (plan.diagnostics.numeric_failure) ++report.numeric_failures;
        if (observer.on_replan) observer.on_replan(index, t, plan);
        committed = std::move(plan.trajectory);
        committed_start = t;
        have_committed = true;
      } catch (const PlannerFailure&) {
        ++report.search_failures;
        lose(t, "planner_failure");
        report.termination = RunTermination::kPlannerFailure;
        break;
      }
    }

    StepRecord rec;
    rec.t = t;
    rec.robot = Pose{state.p, state.psi};
    rec.target = target;
    const FovCheck fov = check_fov(rec.robot, target, scenario.fov_half_horizontal,
                                   scenario.fov_half_vertical, world.grid);
    try {
      rec.psi_err = std::abs(wrap_angle(state.psi - best_yaw(state.p, target)));
    } catch (const DegenerateGeometry&) {
      rec.psi_err = 0.0;
    }
    rec.in_cone = fov.in_cone;
    rec.occluded = fov.occluded;
    rec.in_fov = fov.visible();
    rec.distance = (target - state.p).norm();
    rec.clearance = world.field.sample_distance(state.p);
    report.steps.push_back(rec);

    psi_sum += rec.psi_err;
    report.max_psi_err = std::max(report.max_psi_err, rec.psi_err);
    report.min_distance = std::min(report.min_distance, rec.distance);
    report.max_distance = std::max(report.max_distance, rec.distance);
    report.min_clearance = std::min(report.min_clearance, rec.clearance);
    if (rec.occluded && !was_occluded) ++report.occlusion_events;
    if (!rec.in_fov && was_visible) ++report.fov_exit_events;
    was_occluded = rec.occluded;
    was_visible = rec.in_fov;

    if (rec.in_fov) {
      const double c = std::cos(state.psi), s = std::sin(state.psi);
      const Vec3 rel = target - state.p;
      report.heatmap.add(Vec3(c * rel.x() + s * rel.y(), -s * rel.x() + c * rel.y(), rel.z()));
    } else {
      lose(t, rec.occluded ? "occluded" : "out_of_fov");
      if (scenario.stop_on_failure) {
        report.termination = RunTermination::kTargetLost;
        break;
      }
    }
  }
  if (report.termination == RunTermination::kCompleted && report.failed &&
      report.failure_cause != "planner_failure")
    report.termination = RunTermination::kTargetLost;
  if (!report.steps.empty()) report.mean_psi_err = psi_sum / report.steps.size();
  if (report.steps.empty()) report.min_distance = report.max_distance = report.min_clearance = 0.0;
  return report;
}

}  // namespace visiplan
