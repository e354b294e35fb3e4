#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "visiplan/cli.hpp"

int main(int argc, char** argv) {
  using namespace visiplan;
  CLI::App app{"Visibility-aware target tracking planner and simulator"};
  app.require_subcommand(1);

  RunManifest run;
  std::string run_mode;
  std::uint64_t run_seed = 0;
  auto* run_cmd = app.add_subcommand("run", "Simulate one scenario");
  run_cmd->add_option("--scenario", run.scenario, "Scenario JSON file")->required();
  run_cmd->add_option("--out", run.out_dir, "Output directory");
  run_cmd->add_option("--mode", run_mode, "visibility or baseline")
      ->check(CLI::IsMember({"visibility", "baseline"}));
  auto* seed_opt = run_cmd->add_option("--seed", run_seed, "Override the scenario seed");
  run_cmd->add_flag("--dump-costs", run.dump_costs, "Write per-replan cost terms to costs.json");
  run_cmd->add_option("--opt-trace", run.opt_trace, "Write optimizer iterations to this CSV");
  run_cmd->add_option("--search-trace", run.search_trace, "Write search expansions to this CSV");

  BenchManifest bench;
  std::string seed_list;
  auto* bench_cmd = app.add_subcommand("bench", "Run a scenario template over seeds in both modes");
  bench_cmd->add_option("--scenario", bench.scenario, "Template scenario JSON file")->required();
  bench_cmd->add_option("--out", bench.out_dir, "Output directory");
  bench_cmd->add_option("--seeds", seed_list, "Comma-separated seeds (may be empty)");
  bench_cmd->add_option("--threads", bench.threads, "Parallel runs (default: VISIPLAN_THREADS or 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  if (*run_cmd) {
    if (!run_mode.empty()) run.mode = parse_mode(run_mode);
    if (*seed_opt) run.seed = run_seed;
    return cmd_run(run, std::cerr);
  }

  std::stringstream ss(seed_list);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      bench.seeds.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      std::cerr << "error: --seeds: '" << item << "' is not a seed\n";
      return kExitUsage;
    }
  }
  return cmd_bench(bench, std::cout, std::cerr);
}
