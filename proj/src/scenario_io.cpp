#include "visiplan/scenario_io.hpp"

#include <fstream>
#include <ostream>
#include <sstream>
#include <variant>

#include <nlohmann/json.hpp>

namespace visiplan {

using nlohmann::json;

namespace {

// A struct's scalar fields, bound by name so reading and echoing share one
// table.
using Slot = std::variant<double*, int*, bool*>;
struct Field {
  const char* name;
  Slot slot;
};

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw ConfigError("scenario: field '" + path + "' " + what);
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) bad(path, "must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) bad(path.empty() ? key : path + "." + key, "is not recognized");
  }
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) bad(path, "must be a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) bad(path, "must be an integer");
  return v.get<int>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) bad(path, "must be true or false");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) bad(path, "must be a string");
  return v.get<std::string>();
}

Vec3 as_vec3(const json& v, const std::string& path, bool allow_2d = true) {
  if (!v.is_array() || v.size() < (allow_2d ? 2u : 3u) || v.size() > 3) bad(path, "must be [x, y, z]");
  Vec3 out = Vec3::Zero();
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = as_number(v[i], path);
  return out;
}

std::vector<Vec3> as_points(const json& v, const std::string& path) {
  if (!v.is_array()) bad(path, "must be a list of points");
  std::vector<Vec3> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_vec3(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

void read_fields(const json& j, const std::string& path, const std::vector<Field>& fields) {
  if (!j.is_object()) bad(path, "must be an object");
  for (const auto& [key, value] : j.items()) {
    const std::string sub = path + "." + key;
    const Field* match = nullptr;
    for (const Field& f : fields)
      if (key == f.name) match = &f;
    if (!match) bad(sub, "is not recognized");
    std::visit(
        [&](auto* p) {
          using T = std::remove_pointer_t<decltype(p)>;
          if constexpr (std::is_same_v<T, double>) *p = as_number(value, sub);
          if constexpr (std::is_same_v<T, int>) *p = as_int(value, sub);
          if constexpr (std::is_same_v<T, bool>) *p = as_bool(value, sub);
        },
        match->slot);
  }
}

json write_fields(const std::vector<Field>& fields) {
  json out = json::object();
  for (const Field& f : fields) std::visit([&](auto* p) { out[f.name] = *p; }, f.slot);
  return out;
}

std::vector<Field> fields_of(VisibilityParams& v) {
  return {{"od_min", &v.od_min}, {"od_max", &v.od_max}, {"rho", &v.rho}, {"m_balls", &v.m_balls}};
}

std::vector<Field> fields_of(CostWeights& w) {
  return {{"do", &w.w_do}, {"ao", &w.w_ao},       {"oe", &w.w_oe},
          {"f", &w.w_f},   {"f_phi", &w.w_f_phi}, {"s", &w.w_s},
          {"s_phi", &w.w_s_phi}, {"c", &w.w_c},   {"v", &w.w_v}};
}

std::vector<Field> fields_of(DynamicLimits& l) {
  return {{"v_m", &l.v_m},         {"a_m", &l.a_m},     {"v_phi_m", &l.v_phi_m},
          {"a_phi_m", &l.a_phi_m}, {"d_thr", &l.d_thr}, {"psi_thr", &l.psi_thr}};
}

std::vector<Field> fields_of(CostOptions& o) {
  return {{"ao_sign_as_printed", &o.ao_sign_as_printed},
          {"collision_trailing_factor", &o.collision_trailing_factor}};
}

std::vector<Field> fields_of(SearchConfig& s) {
  return {{"tau", &s.tau},
          {"accel_per_axis", &s.accel_per_axis},
          {"prune_resolution", &s.prune_resolution},
          {"velocity_resolution", &s.velocity_resolution},
          {"heuristic_weight", &s.heuristic_weight},
          {"max_expansions", &s.max_expansions},
          {"standoff", &s.standoff},
          {"goal_tolerance", &s.goal_tolerance},
          {"collision_samples", &s.collision_samples},
          {"check_occlusion", &s.check_occlusion},
          {"effort_weight", &s.effort_weight},
          {"standoff_weight", &s.standoff_weight},
          {"target_speed_bound", &s.target_speed_bound}};
}

std::vector<Field> fields_of(OptimizerConfig& o) {
  return {{"max_iterations", &o.max_iterations},
          {"gradient_tolerance", &o.gradient_tolerance},
          {"relative_cost_tolerance", &o.relative_cost_tolerance},
          {"history_size", &o.history_size},
          {"max_line_search_steps", &o.max_line_search_steps},
          {"wall_clock_budget", &o.wall_clock_budget},
          {"armijo", &o.armijo},
          {"curvature", &o.curvature},
          {"planar_altitude_lock", &o.planar_altitude_lock}};
}

std::vector<Field> fields_of(PredictionConfig& p) {
  return {{"degree", &p.degree},
          {"ridge", &p.ridge},
          {"window", &p.window},
          {"validity_horizon", &p.validity_horizon},
          {"max_speed", &p.max_speed},
          {"max_accel", &p.max_accel}};
}

void read_planner(const json& j, PlannerConfig& p) {
  check_keys(j, "planner",
             {"control_points", "dt", "mode", "visibility", "weights", "limits", "options", "search",
              "optimizer", "prediction"});
  if (j.contains("control_points")) p.control_points = as_int(j["control_points"], "planner.control_points");
  if (j.contains("dt")) p.dt = as_number(j["dt"], "planner.dt");
  if (j.contains("mode")) {
    try {
      p.mode = parse_mode(as_string(j["mode"], "planner.mode"));
    } catch (const ConfigError&) {
      bad("planner.mode", "must be \"visibility\" or \"baseline\"");
    }
  }
  if (j.contains("visibility")) read_fields(j["visibility"], "planner.visibility", fields_of(p.model.visibility));
  if (j.contains("weights")) read_fields(j["weights"], "planner.weights", fields_of(p.model.weights));
  if (j.contains("limits")) read_fields(j["limits"], "planner.limits", fields_of(p.model.limits));
  if (j.contains("options")) read_fields(j["options"], "planner.options", fields_of(p.model.options));
  if (j.contains("search")) read_fields(j["search"], "planner.search", fields_of(p.search));
  if (j.contains("optimizer")) read_fields(j["optimizer"], "planner.optimizer", fields_of(p.optimizer));
  if (j.contains("prediction")) read_fields(j["prediction"], "planner.prediction", fields_of(p.prediction));
}

void read_map(const json& j, MapSpec& m, const std::filesystem::path& base_dir) {
  check_keys(j, "map",
             {"type", "file", "resolution", "origin", "size", "area_min", "area_max", "obstacle_count",
              "radius_min", "radius_max", "clearance", "max_retries"});
  if (!j.contains("type")) bad("map.type", "is required");
  const std::string type = as_string(j["type"], "map.type");
  if (j.contains("resolution")) m.resolution = as_number(j["resolution"], "map.resolution");
  if (j.contains("origin")) m.origin = as_vec3(j["origin"], "map.origin");
  if (type == "file") {
    if (!j.contains("file")) bad("map.file", "is required for file maps");
    const std::filesystem::path file = as_string(j["file"], "map.file");
    m.kind = MapSpec::Kind::kFile;
    m.file = (file.is_absolute() ? file : base_dir / file).string();
  } else if (type == "empty") {
    m.kind = MapSpec::Kind::kEmpty;
    if (j.contains("size")) m.size = as_vec3(j["size"], "map.size");
  } else if (type == "forest") {
    m.kind = MapSpec::Kind::kForest;
    ForestSpec& f = m.forest;
    f.resolution = m.resolution;
    if (j.contains("area_min")) f.area_min = as_vec3(j["area_min"], "map.area_min");
    if (j.contains("area_max")) f.area_max = as_vec3(j["area_max"], "map.area_max");
    if (j.contains("obstacle_count")) f.obstacle_count = as_int(j["obstacle_count"], "map.obstacle_count");
    if (j.contains("radius_min")) f.radius_min = as_number(j["radius_min"], "map.radius_min");
    if (j.contains("radius_max")) f.radius_max = as_number(j["radius_max"], "map.radius_max");
    if (j.contains("clearance")) f.clearance = as_number(j["clearance"], "map.clearance");
    if (j.contains("max_retries")) f.max_retries = as_int(j["max_retries"], "map.max_retries");
  } else {
    bad("map.type", "must be \"file\", \"empty\" or \"forest\"");
  }
}

void read_target(const json& j, TargetSpec& t, double duration) {
  check_keys(j, "target",
             {"type", "start", "waypoints", "times", "speed", "smoothing", "start_delay", "margin",
              "min_leg", "route_duration"});
  if (!j.contains("type")) bad("target.type", "is required");
  const std::string type = as_string(j["type"], "target.type");
  if (j.contains("start")) t.start = as_vec3(j["start"], "target.start");
  if (j.contains("speed")) t.speed = as_number(j["speed"], "target.speed");
  if (j.contains("smoothing")) t.smoothing = as_int(j["smoothing"], "target.smoothing");
  if (j.contains("start_delay")) t.start_delay = as_number(j["start_delay"], "target.start_delay");
  if (j.contains("waypoints")) t.waypoints = as_points(j["waypoints"], "target.waypoints");
  if (type == "static") {
    t.kind = TargetSpec::Kind::kStatic;
    if (!j.contains("start")) bad("target.start", "is required");
  } else if (type == "waypoints") {
    t.kind = TargetSpec::Kind::kWaypoints;
    if (!j.contains("start")) bad("target.start", "is required");
  } else if (type == "timed") {
    t.kind = TargetSpec::Kind::kTimed;
    if (!j.contains("times") || !j["times"].is_array()) bad("target.times", "must be a list of times");
    for (std::size_t i = 0; i < j["times"].size(); ++i)
      t.times.push_back(as_number(j["times"][i], "target.times"));
    if (t.waypoints.empty() || t.waypoints.size() != t.times.size())
      bad("target.times", "must have one entry per waypoint");
    t.start = t.waypoints.front();
  } else if (type == "random") {
    t.kind = TargetSpec::Kind::kRandom;
    if (!j.contains("start")) bad("target.start", "is required");
    t.random.duration = duration;
    if (j.contains("margin")) t.random.margin = as_number(j["margin"], "target.margin");
    if (j.contains("min_leg")) t.random.min_leg = as_number(j["min_leg"], "target.min_leg");
    if (j.contains("route_duration")) t.random.duration = as_number(j["route_duration"], "target.route_duration");
  } else {
    bad("target.type", "must be \"static\", \"waypoints\", \"timed\" or \"random\"");
  }
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

double degrees(double rad) { return rad * 180.0 / kPi; }

}  // namespace

Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario: malformed JSON: ") + e.what());
  }
  check_keys(j, "",
             {"name", "seed", "duration", "sim_step", "replan_period", "stop_on_failure", "pose_noise",
              "fov_deg", "map", "robot", "target", "planner"});
  Scenario s;
  if (j.contains("name")) s.name = as_string(j["name"], "name");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) bad("seed", "must be a non-negative integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("duration")) s.duration = as_number(j["duration"], "duration");
  if (j.contains("sim_step")) s.sim_step = as_number(j["sim_step"], "sim_step");
  if (j.contains("replan_period")) s.replan_period = as_number(j["replan_period"], "replan_period");
  if (j.contains("stop_on_failure")) s.stop_on_failure = as_bool(j["stop_on_failure"], "stop_on_failure");
  if (j.contains("pose_noise")) s.pose_noise = as_number(j["pose_noise"], "pose_noise");
  if (j.contains("fov_deg")) {
    const json& f = j["fov_deg"];
    check_keys(f, "fov_deg", {"horizontal", "vertical"});
    if (f.contains("horizontal")) s.fov_half_horizontal = 0.5 * as_number(f["horizontal"], "fov_deg.horizontal") * kPi / 180.0;
    if (f.contains("vertical")) s.fov_half_vertical = 0.5 * as_number(f["vertical"], "fov_deg.vertical") * kPi / 180.0;
  }
  if (!j.contains("map")) bad("map", "is required");
  read_map(j["map"], s.map, base_dir);
  if (!j.contains("robot")) bad("robot", "is required");
  {
    const json& r = j["robot"];
    check_keys(r, "robot", {"position", "yaw"});
    if (!r.contains("position")) bad("robot.position", "is required");
    s.robot_start = as_vec3(r["position"], "robot.position");
    if (r.contains("yaw")) s.robot_yaw = as_number(r["yaw"], "robot.yaw");
  }
  if (!j.contains("target")) bad("target", "is required");
  read_target(j["target"], s.target, s.duration);
  if (j.contains("planner")) read_planner(j["planner"], s.planner);
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read scenario file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.parent_path());
}

namespace {

json config_json(const Scenario& scenario) {
  PlannerConfig p = scenario.planner.effective();
  json planner;
  planner["mode"] = std::string(mode_name(p.mode));
  planner["control_points"] = p.control_points;
  planner["dt"] = p.dt;
  planner["horizon"] = p.horizon();
  planner["visibility"] = write_fields(fields_of(p.model.visibility));
  planner["weights"] = write_fields(fields_of(p.model.weights));
  planner["limits"] = write_fields(fields_of(p.model.limits));
  planner["options"] = write_fields(fields_of(p.model.options));
  planner["search"] = write_fields(fields_of(p.search));
  planner["optimizer"] = write_fields(fields_of(p.optimizer));
  planner["prediction"] = write_fields(fields_of(p.prediction));

  json out;
  out["name"] = scenario.name;
  out["seed"] = scenario.seed;
  out["duration"] = scenario.duration;
  out["sim_step"] = scenario.sim_step;
  out["replan_period"] = scenario.replan_period;
  out["stop_on_failure"] = scenario.stop_on_failure;
  out["pose_noise"] = scenario.pose_noise;
  out["fov_deg"] = {{"horizontal", 2.0 * degrees(scenario.fov_half_horizontal)},
                    {"vertical", 2.0 * degrees(scenario.fov_half_vertical)}};
  out["robot"] = {{"position", vec_json(scenario.robot_start)}, {"yaw", scenario.robot_yaw}};
  out["planner"] = std::move(planner);
  return out;
}

}  // namespace

std::string scenario_config_json(const Scenario& scenario) { return config_json(scenario).dump(2); }

std::string report_to_json(const RunReport& report, const Scenario& scenario) {
  json j;
  j["scenario"] = report.scenario;
  j["mode"] = std::string(mode_name(report.mode));
  j["seed"] = report.seed;
  j["config"] = config_json(scenario);
  j["duration"] = report.duration;
  j["steps"] = report.steps.size();
  j["failed"] = report.failed;
  j["failure_time"] = report.failure_time;
  j["failure_cause"] = report.failed ? json(report.failure_cause) : json(nullptr);
  j["termination"] = std::string(termination_name(report.termination));
  j["occlusion_events"] = report.occlusion_events;
  j["fov_exit_events"] = report.fov_exit_events;
  j["mean_psi_err"] = report.mean_psi_err;
  j["max_psi_err"] = report.max_psi_err;
  j["min_distance"] = report.min_distance;
  j["max_distance"] = report.max_distance;
  j["min_clearance"] = report.min_clearance;
  j["replans"] = report.replans;
  j["search_failures"] = report.search_failures;
  j["numeric_failures"] = report.numeric_failures;
  j["heatmap_total"] = report.heatmap.total();
  json series = json::array();
  for (const StepRecord& s : report.steps) series.push_back(s.psi_err);
  j["psi_err"] = std::move(series);
  return j.dump(2) + "\n";
}

namespace {

json cost_object(const CostReport& report) {
  json j = json::object();
  for (int i = 0; i < kCostTermCount; ++i)
    j[std::string(term_name(static_cast<CostTerm>(i)))] = report.terms[i];
  j["total"] = report.total;
  return j;
}

}  // namespace

std::string cost_report_json(const CostReport& report) { return cost_object(report).dump(2) + "\n"; }

std::string cost_dump_json(const std::vector<ReplanCostRecord>& records) {
  json out = json::array();
  for (const ReplanCostRecord& r : records) {
    json j;
    j["replan"] = r.replan;
    j["t"] = r.t;
    j["search_ok"] = r.search_ok;
    j["used_fallback"] = r.used_fallback;
    j["numeric_failure"] = r.numeric_failure;
    j["iterations"] = r.iterations;
    j["termination"] = std::string(termination_name(r.termination));
    j["costs"] = cost_object(r.costs);
    out.push_back(std::move(j));
  }
  return out.dump(2) + "\n";
}

void write_trace_csv(std::ostream& out, const RunReport& report) {
  const auto old = out.precision(17);
  out << "t,x,y,z,yaw,target_x,target_y,target_z,psi_err,in_cone,occluded,in_fov,distance,clearance\n";
  for (const StepRecord& s : report.steps) {
    out << s.t << ',' << s.robot.p.x() << ',' << s.robot.p.y() << ',' << s.robot.p.z() << ','
        << s.robot.yaw << ',' << s.target.x() << ',' << s.target.y() << ',' << s.target.z() << ','
        << s.psi_err << ',' << int(s.in_cone) << ',' << int(s.occluded) << ',' << int(s.in_fov) << ','
        << s.distance << ',' << s.clearance << '\n';
  }
  out.precision(old);
}

void write_heatmap_csv(std::ostream& out, const HeatMap& heatmap) {
  const auto old = out.precision(17);
  out << "ix,iy,x,y,count\n";
  const int n = heatmap.bins_per_axis();
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      const std::size_t idx = static_cast<std::size_t>(iy) * n + ix;
      const long count = idx < heatmap.counts.size() ? heatmap.counts[idx] : 0;
      out << ix << ',' << iy << ',' << -heatmap.half_extent + (ix + 0.5) * heatmap.bin << ','
          << -heatmap.half_extent + (iy + 0.5) * heatmap.bin << ',' << count << '\n';
    }
  out.precision(old);
}

}  // namespace visiplan
