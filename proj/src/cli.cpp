#include "visiplan/cli.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include "visiplan/scenario_io.hpp"

namespace visiplan {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

void write_outputs(const fs::path& dir, const RunReport& report, const Scenario& scenario) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
  {
    auto out = open_out(dir / "report.json");
    out << report_to_json(report, scenario);
  }
  {
    auto out = open_out(dir / "trace.csv");
    write_trace_csv(out, report);
  }
  {
    auto out = open_out(dir / "heatmap.csv");
    write_heatmap_csv(out, report.heatmap);
  }
}

void write_terms_header(std::ostream& out) {
  for (int i = 0; i < kCostTermCount; ++i) out << ',' << term_name(static_cast<CostTerm>(i));
  out << ",total\n";
}

void write_terms(std::ostream& out, const CostReport& r) {
  for (double v : r.terms) out << ',' << v;
  out << ',' << r.total << '\n';
}

}  // namespace

int cmd_run(const RunManifest& manifest, std::ostream& err) {
  Scenario scenario;
  try {
    scenario = load_scenario(manifest.scenario);
    if (manifest.seed) scenario.seed = *manifest.seed;
    if (manifest.mode) scenario.planner.mode = *manifest.mode;
    scenario.validate();
  } catch (const ConfigError& e) {
    err << "error: " << manifest.scenario << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }

  const fs::path out_dir = manifest.out_dir;
  try {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error("cannot create output directory '" + out_dir.string() + "': " + ec.message());

    std::ofstream opt_trace, search_trace;
    std::vector<ReplanCostRecord> cost_records;
    SimObserver observer;
    if (manifest.dump_costs) {
      observer.on_replan = [&](int index, double t, const ReplanResult& plan) {
        const ReplanDiagnostics& d = plan.diagnostics;
        cost_records.push_back({index, t, d.search_ok, d.used_fallback, d.numeric_failure, d.iterations,
                                d.termination, d.report});
      };
    }
    if (!manifest.opt_trace.empty()) {
      opt_trace = open_out(manifest.opt_trace);
      opt_trace.precision(17);
      opt_trace << "replan,iteration";
      write_terms_header(opt_trace);
      observer.on_iteration = [&](int index, int it, const CostReport& r) {
        opt_trace << index << ',' << it;
        write_terms(opt_trace, r);
      };
    }
    if (!manifest.search_trace.empty()) {
      search_trace = open_out(manifest.search_trace);
      search_trace.precision(17);
      search_trace << "replan,t,x,y,z,vx,vy,vz,g,f\n";
      observer.on_expansion = [&](int index, const PathNode& n, double f) {
        search_trace << index << ',' << n.t << ',' << n.p.x() << ',' << n.p.y() << ',' << n.p.z() << ','
                     << n.v.x() << ',' << n.v.y() << ',' << n.v.z() << ',' << n.cost << ',' << f << '\n';
      };
    }

    const RunReport report = run(scenario, observer);
    write_outputs(out_dir, report, scenario);
    if (manifest.dump_costs) {
      auto out = open_out(out_dir / "costs.json");
      out << cost_dump_json(cost_records);
      if (!out.flush()) throw Error("write failure on costs.json");
    }
    for (std::ofstream* f : {&opt_trace, &search_trace})
      if (f->is_open() && !f->flush()) throw Error("write failure on a trace file");
  } catch (const ConfigError& e) {
    err << "error: " << manifest.scenario << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitOk;
}

int threads_from_env() {
  const char* v = std::getenv("VISIPLAN_THREADS");
  if (!v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (end == v || *end != '\0' || n < 1) return 1;
  return static_cast<int>(std::min(n, 256L));
}

std::vector<BenchRow> run_bench(const Scenario& templ, const std::vector<std::uint64_t>& seeds,
                                int threads, const std::string& per_run_dir) {
  const PlannerMode modes[2] = {PlannerMode::kVisibility, PlannerMode::kBaseline};
  const std::size_t jobs = seeds.size() * 2;
  std::vector<BenchRow> rows(jobs);
  std::vector<std::exception_ptr> errors(jobs);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < jobs; i = next++) {
      Scenario s = templ;
      s.seed = seeds[i / 2];
      s.planner.mode = modes[i % 2];
      try {
        const RunReport report = run(s);
        if (!per_run_dir.empty())
          write_outputs(fs::path(per_run_dir) /
                            ("seed_" + std::to_string(s.seed) + "_" + std::string(mode_name(s.planner.mode))),
                        report, s);
        rows[i] = {s.seed, s.planner.mode, report.failure_time, report.occlusion_events, report.mean_psi_err};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(jobs)));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  }

  for (std::size_t i = 0; i < jobs; ++i) {
    if (!errors[i]) continue;
    const std::string context =
        "seed " + std::to_string(seeds[i / 2]) + ", mode " + std::string(mode_name(modes[i % 2])) + ": ";
    try {
      std::rethrow_exception(errors[i]);
    } catch (const ConfigError& e) {
      throw ConfigError(context + e.what());
    } catch (const std::exception& e) {
      throw Error(context + e.what());
    }
  }
  return rows;
}

int cmd_bench(const BenchManifest& manifest, std::ostream& out, std::ostream& err) {
  try {
    const Scenario templ = load_scenario(manifest.scenario);
    const int threads = manifest.threads > 0 ? manifest.threads : threads_from_env();
    const fs::path dir = manifest.out_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
    const auto rows = run_bench(templ, manifest.seeds, threads, (dir / "runs").string());

    auto csv = open_out(dir / "bench.csv");
    csv.precision(17);
    csv << "seed,mode,failure_time,occlusion_events,mean_psi_err\n";
    for (const BenchRow& r : rows)
      csv << r.seed << ',' << mode_name(r.mode) << ',' << r.failure_time << ',' << r.occlusion_events << ','
          << r.mean_psi_err << '\n';
    if (!csv.flush()) throw Error("write failure on bench.csv");

    for (PlannerMode mode : {PlannerMode::kVisibility, PlannerMode::kBaseline}) {
      double sum = 0.0;
      int count = 0;
      for (const BenchRow& r : rows)
        if (r.mode == mode) sum += r.failure_time, ++count;
      out << mode_name(mode) << " mean_failure_time ";
      if (count) out << sum / count; else out << "n/a";
      out << " runs " << count << '\n';
    }
  } catch (const ConfigError& e) {
    err << "error: " << manifest.scenario << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitOk;
}

}  // namespace visiplan
