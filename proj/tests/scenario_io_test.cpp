#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <sstream>

#include "visiplan/scenario_io.hpp"

namespace visiplan {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

const fs::path kScenarios = fs::path(VISIPLAN_SOURCE_DIR) / "scenarios";

const char* kMinimal = R"({
  "map": {"type": "empty", "size": [10, 10]},
  "robot": {"position": [1, 2, 1]},
  "target": {"type": "static", "start": [4, 2, 1]}
})";

// Returns the ConfigError message raised by parsing `doc`.
std::string parse_error(const json& doc) {
  try {
    parse_scenario(doc.dump());
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "<no error>";
}

TEST(ParseScenario, Minimal) {
  const Scenario s = parse_scenario(kMinimal);
  EXPECT_EQ(s.map.kind, MapSpec::Kind::kEmpty);
  EXPECT_EQ(s.robot_start, Vec3(1, 2, 1));
  EXPECT_EQ(s.target.start, Vec3(4, 2, 1));
  EXPECT_EQ(s.planner.mode, PlannerMode::kVisibility);
  EXPECT_NEAR(s.fov_half_horizontal, 40.0 * kPi / 180.0, 1e-15);
}

TEST(ParseScenario, FovIsFullAngleInDegrees) {
  json doc = json::parse(kMinimal);
  doc["fov_deg"] = {{"horizontal", 86}, {"vertical", 57}};
  const Scenario s = parse_scenario(doc.dump());
  EXPECT_NEAR(s.fov_half_horizontal, 43.0 * kPi / 180.0, 1e-15);
  EXPECT_NEAR(s.fov_half_vertical, 28.5 * kPi / 180.0, 1e-15);
}

TEST(ParseScenario, ErrorsNameTheField) {
  const json base = json::parse(kMinimal);
  struct Case {
    std::function<void(json&)> edit;
    std::string field;
  };
  const std::vector<Case> cases = {
      {[](json& d) { d["durration"] = 3; }, "'durration'"},
      {[](json& d) { d["duration"] = "long"; }, "'duration'"},
      {[](json& d) { d["seed"] = -4; }, "'seed'"},
      {[](json& d) { d.erase("map"); }, "'map'"},
      {[](json& d) { d["map"].erase("type"); }, "'map.type'"},
      {[](json& d) { d["map"]["type"] = "maze"; }, "'map.type'"},
      {[](json& d) { d["map"]["size"] = {1}; }, "'map.size'"},
      {[](json& d) { d["robot"]["position"] = "here"; }, "'robot.position'"},
      {[](json& d) { d["target"]["type"] = "static"; d["target"].erase("start"); }, "'target.start'"},
      {[](json& d) { d["target"]["waypoints"] = {{1, 2, 3}, {1}}; }, "'target.waypoints[1]'"},
      {[](json& d) { d["planner"] = {{"weights", {{"ao", "lots"}}}}; }, "'planner.weights.ao'"},
      {[](json& d) { d["planner"] = {{"weights", {{"zz", 1.0}}}}; }, "'planner.weights.zz'"},
      {[](json& d) { d["planner"] = {{"optimizer", {{"max_iterations", 1.5}}}}; }, "'planner.optimizer.max_iterations'"},
      {[](json& d) { d["planner"] = {{"mode", "fast"}}; }, "'planner.mode'"},
      {[](json& d) { d["planner"] = {{"search", {{"check_occlusion", 1}}}}; }, "'planner.search.check_occlusion'"},
      {[](json& d) { d["fov_deg"] = {{"diagonal", 90}}; }, "'fov_deg.diagonal'"},
  };
  for (const Case& c : cases) {
    json doc = base;
    c.edit(doc);
    EXPECT_NE(parse_error(doc).find(c.field), std::string::npos) << parse_error(doc);
  }
}

TEST(ParseScenario, SemanticValidation) {
  json doc = json::parse(kMinimal);
  doc["fov_deg"] = {{"horizontal", 180}};
  EXPECT_THROW(parse_scenario(doc.dump()), ConfigError);
  doc = json::parse(kMinimal);
  doc["planner"] = {{"limits", {{"v_m", -1.0}}}};
  EXPECT_THROW(parse_scenario(doc.dump()), ConfigError);
}

TEST(ParseScenario, MalformedJson) {
  try {
    parse_scenario("{\"map\": ");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("malformed JSON"), std::string::npos);
  }
}

TEST(LoadScenario, MissingFileIsAnError) {
  EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), Error);
  json doc = json::parse(kMinimal);
  doc["map"] = {{"type", "file"}, {"file", "no_such_map.txt"}};
  // Map files are read when the world is built.
  const Scenario s = parse_scenario(doc.dump(), "/tmp");
  EXPECT_EQ(fs::path(s.map.file), fs::path("/tmp/no_such_map.txt"));
  EXPECT_THROW(build_world(s), Error);
}

TEST(LoadScenario, BundledScenariosParse) {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(kScenarios)) {
    if (entry.path().extension() != ".json") continue;
    EXPECT_NO_THROW(load_scenario(entry.path())) << entry.path();
    ++count;
  }
  EXPECT_GE(count, 4);
}

// The planner echo parses back into the same configuration.
TEST(ConfigEcho, RoundTrip) {
  for (const char* name : {"case1_corners.json", "case2_zigzag.json", "forest.json", "open_space.json"}) {
    const Scenario s = load_scenario(kScenarios / name);
    const json echo = json::parse(scenario_config_json(s));
    json doc = echo;
    doc["planner"].erase("horizon");
    doc["map"] = {{"type", "empty"}};
    doc["target"] = {{"type", "static"}, {"start", {0, 0, 1}}};
    const Scenario back = parse_scenario(doc.dump());
    EXPECT_EQ(json::parse(scenario_config_json(back)), echo) << name;
  }
}

TEST(ConfigEcho, BaselineZeroesVisibilityWeights) {
  json doc = json::parse(kMinimal);
  doc["planner"] = {{"mode", "baseline"}};
  const json echo = json::parse(scenario_config_json(parse_scenario(doc.dump())));
  EXPECT_EQ(echo["planner"]["mode"], "baseline");
  for (const char* w : {"do", "ao", "oe", "v"}) EXPECT_EQ(echo["planner"]["weights"][w], 0.0) << w;
  EXPECT_GT(echo["planner"]["weights"]["c"].get<double>(), 0.0);
  EXPECT_EQ(echo["planner"]["search"]["check_occlusion"], false);
}

TEST(CostReportJson, HasEveryTerm) {
  CostReport r;
  for (int i = 0; i < kCostTermCount; ++i) r.terms[i] = 0.1 * (i + 1) + 1e-17 * i;
  r.total = 1.0 / 3.0;
  const json j = json::parse(cost_report_json(r));
  EXPECT_EQ(j.size(), static_cast<std::size_t>(kCostTermCount) + 1);
  for (int i = 0; i < kCostTermCount; ++i)
    EXPECT_EQ(j[std::string(term_name(static_cast<CostTerm>(i)))].get<double>(), r.terms[i]);
  EXPECT_EQ(j["total"].get<double>(), r.total);

  ReplanCostRecord rec;
  rec.replan = 3;
  rec.costs = r;
  const json dump = json::parse(cost_dump_json({rec, rec}));
  ASSERT_EQ(dump.size(), 2u);
  EXPECT_EQ(dump[1]["replan"], 3);
  EXPECT_EQ(dump[1]["costs"]["total"].get<double>(), r.total);
}

TEST(Outputs, ReportTraceAndHeatmapParse) {
  Scenario s = parse_scenario(kMinimal);
  s.duration = 1.0;
  const RunReport r = run(s);
  const json rep = json::parse(report_to_json(r, s));
  EXPECT_EQ(rep["failure_time"].get<double>(), r.failure_time);
  EXPECT_EQ(rep["steps"].get<std::size_t>(), r.steps.size());
  ASSERT_EQ(rep["psi_err"].size(), r.steps.size());
  for (std::size_t i = 0; i < r.steps.size(); ++i) EXPECT_EQ(rep["psi_err"][i].get<double>(), r.steps[i].psi_err);
  EXPECT_TRUE(rep["failure_cause"].is_null());

  std::ostringstream trace;
  write_trace_csv(trace, r);
  std::istringstream lines(trace.str());
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "t,x,y,z,yaw,target_x,target_y,target_z,psi_err,in_cone,occluded,in_fov,distance,clearance");
  std::size_t rows = 0;
  while (std::getline(lines, line)) {
    std::istringstream cells(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(cells, cell, ',')) v.push_back(std::stod(cell));
    ASSERT_EQ(v.size(), 14u);
    EXPECT_EQ(v[0], r.steps[rows].t);
    EXPECT_EQ(v[1], r.steps[rows].robot.p.x());
    EXPECT_EQ(v[8], r.steps[rows].psi_err);
    ++rows;
  }
  EXPECT_EQ(rows, r.steps.size());

  std::ostringstream heat;
  write_heatmap_csv(heat, r.heatmap);
  std::istringstream hl(heat.str());
  std::getline(hl, line);
  EXPECT_EQ(line, "ix,iy,x,y,count");
  long total = 0;
  int bins = 0;
  while (std::getline(hl, line)) {
    total += std::stol(line.substr(line.rfind(',') + 1));
    ++bins;
  }
  EXPECT_EQ(bins, r.heatmap.bins_per_axis() * r.heatmap.bins_per_axis());
  EXPECT_EQ(total, r.heatmap.total());
}

}  // namespace
}  // namespace visiplan
