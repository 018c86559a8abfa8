#include <atomic>
#include <iostream>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "scenario.hpp"

using namespace masgame;

int main(int argc, char** argv) {
  CLI::App app{"Two-layer mobile network formation game simulator"};
  app.require_subcommand(1);

  std::vector<std::string> scenario_paths;
  std::string out_dir = "out";
  std::string snapshot;
  uint64_t seed = 0;
  bool seed_set = false;
  int max_steps = 0;
  int jobs = 1;
  double tol = 1e-4;

  auto* run_cmd = app.add_subcommand("run", "Run one or more scenarios and export traces");
  run_cmd->add_option("scenario", scenario_paths, "Scenario file(s)")->required()->expected(-1);
  run_cmd->add_option("--out", out_dir, "Output directory");
  run_cmd->add_option("--seed", seed, "Override the scenario seed")->each([&](const std::string&) {
    seed_set = true;
  });
  run_cmd->add_option("--max-steps", max_steps, "Override the scenario step limit");
  run_cmd->add_option("--jobs", jobs, "Run scenarios concurrently")->check(CLI::PositiveNumber);

  auto* verify_cmd = app.add_subcommand("verify", "Check a positions snapshot for equilibrium");
  verify_cmd->add_option("scenario", scenario_paths, "Scenario file")->required()->expected(1);
  verify_cmd->add_option("--snapshot", snapshot, "Positions snapshot (snapshot.json or summary.json)")
      ->required();
  verify_cmd->add_option("--tol", tol, "Improvement tolerance");

  auto* attack_cmd = app.add_subcommand("attack-plan", "Print worst-case and greedy attack plans");
  attack_cmd->add_option("scenario", scenario_paths, "Scenario file")->required()->expected(1);
  attack_cmd->add_option("--snapshot", snapshot, "Positions snapshot")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      std::vector<ScenarioConfig> configs;
      for (const auto& path : scenario_paths) {
        ScenarioConfig cfg = load_scenario(path);
        if (seed_set) cfg.engine.seed = seed;
        if (max_steps > 0) cfg.engine.max_steps = max_steps;
        configs.push_back(std::move(cfg));
      }
      std::atomic<int> next{0};
      std::atomic<int> failures{0};
      auto worker = [&]() {
        while (true) {
          const int idx = next.fetch_add(1);
          if (idx >= static_cast<int>(configs.size())) return;
          const auto& cfg = configs[idx];
          const std::filesystem::path dir =
              configs.size() == 1 ? std::filesystem::path(out_dir)
                                  : std::filesystem::path(out_dir) / cfg.name;
          if (run_scenario(cfg, dir) != 0) failures.fetch_add(1);
        }
      };
      const int nthreads = std::max(1, std::min<int>(jobs, static_cast<int>(configs.size())));
      std::vector<std::thread> pool;
      for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
      return failures.load() == 0 ? 0 : 1;
    }
    if (verify_cmd->parsed()) {
      const ScenarioConfig cfg = load_scenario(scenario_paths.front());
      return verify_scenario(cfg, snapshot, tol, std::cout);
    }
    if (attack_cmd->parsed()) {
      const ScenarioConfig cfg = load_scenario(scenario_paths.front());
      return attack_plan_report(cfg, snapshot, std::cout);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
