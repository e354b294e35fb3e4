#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "visiplan/sim.hpp"

namespace visiplan {

/// Exit codes: tracking failure is data, not an error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;

struct RunManifest {
  std::string scenario;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<PlannerMode> mode;
  bool dump_costs = false;
  std::string opt_trace;
  std::string search_trace;
};

/// Runs one scenario and writes report.json, trace.csv and heatmap.csv (and
/// costs.json / trace files when requested). Diagnostics go to `err`.
int cmd_run(const RunManifest& manifest, std::ostream& err);

struct BenchManifest {
  std::string scenario;
  std::string out_dir = ".";
  std::vector<std::uint64_t> seeds;
  /// 0 reads VISIPLAN_THREADS (default 1).
  int threads = 0;
};

struct BenchRow {
  std::uint64_t seed = 0;
  PlannerMode mode = PlannerMode::kVisibility;
  double failure_time = 0.0;
  int occlusion_events = 0;
  double mean_psi_err = 0.0;
};

/// Runs every (seed, mode) pair of a template scenario, ordered by seed then
/// mode regardless of thread count. A configuration error in any run throws
/// ConfigError naming the seed and mode.
std::vector<BenchRow> run_bench(const Scenario& templ, const std::vector<std::uint64_t>& seeds,
                                int threads, const std::string& per_run_dir = {});

/// Writes bench.csv (seed,mode,failure_time,occlusion_events,mean_psi_err)
/// and per-run outputs; prints the per-mode mean failure time to `out`.
int cmd_bench(const BenchManifest& manifest, std::ostream& out, std::ostream& err);

/// Thread cap from VISIPLAN_THREADS; 1 when unset or invalid.
int threads_from_env();

}  // namespace visiplan
