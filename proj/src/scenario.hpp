#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "game_engine.hpp"

namespace masgame {

struct ScenarioConfig {
  int schema_version = 1;
  std::string name;  // defaults to the file stem
  std::vector<AgentState> agents;
  WeightParams weights;
  PlayerParams p1;
  PlayerParams p2;
  EngineParams engine;
  AttackSpec attack;
  std::optional<SpoofSpec> spoofing;
};

// Parses and validates a scenario file. Throws ParseError for malformed JSON
// and ValidationError listing every violated invariant.
ScenarioConfig load_scenario(const std::filesystem::path& path);
ScenarioConfig parse_scenario(const std::string& text, const std::string& name);

std::string serialize_scenario(const ScenarioConfig& config);

// Runs the formation game and writes trace.csv, summary.json, snapshot.json
// and events.log under out_dir. Returns a process exit status.
int run_scenario(const ScenarioConfig& config, const std::filesystem::path& out_dir);

// Positions snapshot ({"positions": [{"id":..,"position":[x,y,z]},..]} or a
// summary.json with "final_positions").
std::vector<AgentState> load_snapshot(const std::filesystem::path& path,
                                      const ScenarioConfig& config);

// Prints the equilibrium verdict and per-player improvement margins.
// Exit status: 0 when the snapshot is an equilibrium, 2 when not, 1 on error.
int verify_scenario(const ScenarioConfig& config, const std::filesystem::path& snapshot,
                    double tol, std::ostream& out);

// Prints the exhaustive and greedy attack plans side by side.
int attack_plan_report(const ScenarioConfig& config, const std::filesystem::path& snapshot,
                       std::ostream& out);

// MASGAME_LOG={debug,info,warn,error}; returns true when `level` is enabled.
bool log_enabled(int level);  // 0=debug 1=info 2=warn 3=error
void log_line(int level, const std::string& msg);

}  // namespace masgame
