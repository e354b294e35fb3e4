#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "visiplan/sim.hpp"

namespace visiplan {

/// Parses a scenario document. Relative map paths resolve against
/// `base_dir`. Unknown or mistyped fields throw ConfigError naming the field.
Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir = {});
/// Reads and parses a scenario file; IO failures throw Error.
Scenario load_scenario(const std::filesystem::path& path);

/// Effective planner/scenario configuration as a JSON object (the echo
/// embedded in report.json).
std::string scenario_config_json(const Scenario& scenario);

/// Aggregates, configuration echo and the psi_err series. Contains no
/// timing data so identical runs give identical bytes.
std::string report_to_json(const RunReport& report, const Scenario& scenario);

/// One field per cost term (unweighted) plus the weighted total.
std::string cost_report_json(const CostReport& report);

struct ReplanCostRecord {
  int replan = 0;
  double t = 0.0;
  bool search_ok = false;
  bool used_fallback = false;
  bool numeric_failure = false;
  int iterations = 0;
  Termination termination = Termination::kConverged;
  CostReport costs;
};

/// JSON array with one object per replan, each embedding its cost report.
std::string cost_dump_json(const std::vector<ReplanCostRecord>& records);

/// Per-step records, 17 significant digits.
void write_trace_csv(std::ostream& out, const RunReport& report);
/// One row per heat-map bin: ix, iy, bin-centre x/y (body frame), count.
void write_heatmap_csv(std::ostream& out, const HeatMap& heatmap);

}  // namespace visiplan
