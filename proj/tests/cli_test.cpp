#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "visiplan/cli.hpp"

namespace visiplan {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("visiplan_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Exit status of the CLI with the given arguments; stderr goes to err.txt.
  int cli(const std::string& args) const {
    const std::string cmd = std::string("\"") + VISIPLAN_CLI + "\" " + args + " >\"" + (dir_ / "out.txt").string() +
                            "\" 2>\"" + (dir_ / "err.txt").string() + "\"";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
    return dir_ / name;
  }

  fs::path short_scenario(double duration = 2.0) const {
    json doc = {{"name", "short"},
                {"duration", duration},
                {"map", {{"type", "empty"}, {"size", {12, 12}}}},
                {"robot", {{"position", {3, 6, 1}}, {"yaw", 0.0}}},
                {"target", {{"type", "waypoints"}, {"start", {6, 6, 1}}, {"waypoints", {{9, 6, 1}, {9, 9, 1}}},
                            {"speed", 1.0}}}};
    return write("short.json", doc.dump());
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

TEST_F(Cli, RunWritesOutputs) {
  const fs::path sc = short_scenario();
  ASSERT_EQ(cli("run --scenario \"" + sc.string() + "\" --out \"" + (dir_ / "r").string() + "\""), kExitOk)
      << slurp(dir_ / "err.txt");
  const json rep = json::parse(slurp(dir_ / "r" / "report.json"));
  ASSERT_TRUE(rep.contains("failure_time"));
  EXPECT_EQ(rep["failure_time"].get<double>(), 2.0);
  EXPECT_EQ(rep["mode"], "visibility");
  EXPECT_TRUE(fs::exists(dir_ / "r" / "trace.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "r" / "heatmap.csv"));
  EXPECT_FALSE(fs::exists(dir_ / "r" / "costs.json"));
}

TEST_F(Cli, TrackingFailureStillExitsZero) {
  json doc = json::parse(slurp(short_scenario()));
  doc["robot"]["yaw"] = 3.14159;
  const fs::path sc = write("away.json", doc.dump());
  ASSERT_EQ(cli("run --scenario \"" + sc.string() + "\" --out \"" + dir_.string() + "\""), kExitOk);
  const json rep = json::parse(slurp(dir_ / "report.json"));
  EXPECT_TRUE(rep["failed"].get<bool>());
  EXPECT_EQ(rep["failure_time"].get<double>(), 0.0);
}

TEST_F(Cli, BaselineEchoesZeroVisibilityWeights) {
  const fs::path sc = short_scenario();
  ASSERT_EQ(cli("run --scenario \"" + sc.string() + "\" --mode baseline --out \"" + dir_.string() + "\""), kExitOk);
  const json rep = json::parse(slurp(dir_ / "report.json"));
  EXPECT_EQ(rep["mode"], "baseline");
  for (const char* w : {"do", "ao", "oe", "v"}) EXPECT_EQ(rep["config"]["planner"]["weights"][w], 0.0) << w;
}

TEST_F(Cli, RerunIsByteIdentical) {
  const fs::path sc = short_scenario(3.0);
  ASSERT_EQ(cli("run --scenario \"" + sc.string() + "\" --out \"" + (dir_ / "a").string() + "\""), kExitOk);
  ASSERT_EQ(cli("run --scenario \"" + sc.string() + "\" --out \"" + (dir_ / "b").string() + "\""), kExitOk);
  for (const char* f : {"report.json", "trace.csv", "heatmap.csv"}) {
    const std::string a = slurp(dir_ / "a" / f);
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(dir_ / "b" / f)) << f;
  }
}

TEST_F(Cli, SeedOverrideIsEchoed) {
  const fs::path sc = short_scenario();
  ASSERT_EQ(cli("run --scenario \"" + sc.string() + "\" --seed 77 --out \"" + dir_.string() + "\""), kExitOk);
  EXPECT_EQ(json::parse(slurp(dir_ / "report.json"))["seed"], 77);
}

TEST_F(Cli, DiagnosticDumps) {
  const fs::path sc = short_scenario(1.0);
  const fs::path opt = dir_ / "opt.csv", srch = dir_ / "search.csv";
  ASSERT_EQ(cli("run --scenario \"" + sc.string() + "\" --dump-costs --opt-trace \"" + opt.string() +
                "\" --search-trace \"" + srch.string() + "\" --out \"" + dir_.string() + "\""),
            kExitOk);
  const json costs = json::parse(slurp(dir_ / "costs.json"));
  const json rep = json::parse(slurp(dir_ / "report.json"));
  EXPECT_EQ(costs.size(), rep["replans"].get<std::size_t>());
  EXPECT_TRUE(costs[0]["costs"].contains("total"));
  std::istringstream o(slurp(opt));
  std::string line;
  std::getline(o, line);
  EXPECT_EQ(line, "replan,iteration,do,ao,oe,f,f_phi,s,s_phi,c,v,total");
  EXPECT_TRUE(static_cast<bool>(std::getline(o, line)));
  std::istringstream s(slurp(srch));
  std::getline(s, line);
  EXPECT_EQ(line, "replan,t,x,y,z,vx,vy,vz,g,f");
  EXPECT_TRUE(static_cast<bool>(std::getline(s, line)));
}

TEST_F(Cli, ConfigAndIoErrors) {
  const fs::path bad = write("bad.json", "{\"map\": {\"type\": \"empty\"}, ");
  EXPECT_EQ(cli("run --scenario \"" + bad.string() + "\" --out \"" + dir_.string() + "\""), kExitConfig);
  EXPECT_NE(slurp(dir_ / "err.txt").find("malformed JSON"), std::string::npos);

  json doc = json::parse(slurp(short_scenario()));
  doc["planner"] = {{"weights", {{"ao", "high"}}}};
  const fs::path typo = write("typo.json", doc.dump());
  EXPECT_EQ(cli("run --scenario \"" + typo.string() + "\" --out \"" + dir_.string() + "\""), kExitConfig);
  EXPECT_NE(slurp(dir_ / "err.txt").find("planner.weights.ao"), std::string::npos);

  EXPECT_EQ(cli("run --scenario \"" + (dir_ / "missing.json").string() + "\""), kExitIo);
  EXPECT_NE(cli("run --scenario \"" + bad.string() + "\" --mode sideways"), kExitOk);
  EXPECT_NE(cli(""), kExitOk);
}

TEST_F(Cli, BenchRowsAndEmptySeeds) {
  const fs::path sc = short_scenario(1.0);
  ASSERT_EQ(cli("bench --scenario \"" + sc.string() + "\" --seeds 5 --out \"" + (dir_ / "one").string() + "\""),
            kExitOk);
  std::istringstream csv(slurp(dir_ / "one" / "bench.csv"));
  std::vector<std::string> lines;
  for (std::string l; std::getline(csv, l);) lines.push_back(l);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "seed,mode,failure_time,occlusion_events,mean_psi_err");
  EXPECT_EQ(lines[1].rfind("5,visibility,", 0), 0u);
  EXPECT_EQ(lines[2].rfind("5,baseline,", 0), 0u);
  EXPECT_NE(slurp(dir_ / "out.txt").find("visibility mean_failure_time"), std::string::npos);

  ASSERT_EQ(cli("bench --scenario \"" + sc.string() + "\" --seeds \"\" --out \"" + (dir_ / "none").string() + "\""),
            kExitOk);
  EXPECT_EQ(slurp(dir_ / "none" / "bench.csv"), "seed,mode,failure_time,occlusion_events,mean_psi_err\n");

  EXPECT_EQ(cli("bench --scenario \"" + sc.string() + "\" --seeds 1,x"), kExitUsage);
}

TEST(BenchApi, OrderIndependentOfThreads) {
  Scenario s;
  s.map.kind = MapSpec::Kind::kEmpty;
  s.map.size = Vec3(12, 12, 0);
  s.robot_start = Vec3(3, 6, 1);
  s.target.kind = TargetSpec::Kind::kWaypoints;
  s.target.start = Vec3(6, 6, 1);
  s.target.waypoints = {Vec3(9, 6, 1)};
  s.duration = 1.0;
  const auto a = run_bench(s, {3, 1, 2}, 1);
  const auto b = run_bench(s, {3, 1, 2}, 4);
  ASSERT_EQ(a.size(), 6u);
  ASSERT_EQ(b.size(), 6u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].seed, b[i].seed);
    EXPECT_EQ(a[i].mode, b[i].mode);
    EXPECT_EQ(a[i].failure_time, b[i].failure_time);
    EXPECT_EQ(a[i].mean_psi_err, b[i].mean_psi_err);
  }
  EXPECT_EQ(a[0].seed, 3u);
  EXPECT_EQ(a[1].mode, PlannerMode::kBaseline);
}

TEST(ThreadsFromEnv, Parsing) {
  ::setenv("VISIPLAN_THREADS", "3", 1);
  EXPECT_EQ(threads_from_env(), 3);
  ::setenv("VISIPLAN_THREADS", "zero", 1);
  EXPECT_EQ(threads_from_env(), 1);
  ::setenv("VISIPLAN_THREADS", "-2", 1);
  EXPECT_EQ(threads_from_env(), 1);
  ::unsetenv("VISIPLAN_THREADS");
  EXPECT_EQ(threads_from_env(), 1);
}

}  // namespace
}  // namespace visiplan
