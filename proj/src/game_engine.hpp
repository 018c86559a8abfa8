#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "subproblem.hpp"

namespace masgame {

struct EngineParams {
  int period_1 = 1;
  int period_2 = 2;
  double kappa = 1e-6;  // convergence threshold on the position infinity norm
  int max_steps = 200;
  bool anticipate_attacks = true;
  bool planar_layers = true;
  uint64_t seed = 0;

  void validate() const;
};

// Scenario-level spoofing description; the concrete plan (target, draws) is
// materialized when the window opens.
struct SpoofSpec {
  std::optional<int> explicit_target;  // empty: pick the max-degree agent at onset
  int start_step = 1;
  int duration = 1;
  double disturbance_range = 0.2;  // horizontal components uniform in [0, range], vertical 0
};

struct StepRecord {
  int step = 0;
  std::vector<AgentState> agents;  // state after the step
  double lambda2_nominal = 0.0;
  double lambda2_worst = 0.0;  // under the scenario attack spec
  bool p1_acted = false;
  bool p2_acted = false;
  bool spoof_active = false;
  int spoof_target = 0;
  // State right after the spoof displacement, before the operators respond;
  // only meaningful while spoof_active.
  double lambda2_worst_post_spoof = -1.0;

  struct PlayerDiag {
    bool solved = false;
    bool usable = false;
    SolveStatus status = SolveStatus::MaxIterations;
    int iterations = 0;
    double scale = 0.0;
    double model_alpha = 0.0;
    KktResiduals kkt;
  };
  PlayerDiag diag_p1, diag_p2;
};

struct GameTrace {
  std::vector<StepRecord> steps;  // index 0 holds the initial state
  bool converged = false;
  int steps_used = 0;
  std::vector<std::string> events;
  bool spoofed = false;
  SpoofingPlan spoof_plan;  // materialized when a window opened
};

// Alternating best-response loop. Player gamma acts at steps divisible by its
// period while its displacement test stays above kappa; history before step 1
// is seeded at half the initial positions so the first updates are not
// suppressed. Throws InfeasibleStart if the initial state violates the
// minimum separations.
GameTrace run(const std::vector<AgentState>& initial, const EngineParams& engine,
              const PlayerParams& p1, const PlayerParams& p2, const WeightParams& weight_params,
              const AttackSpec& attack, const std::optional<SpoofSpec>& spoof = {});

struct EquilibriumReport {
  bool holds = false;
  double improvement_p1 = 0.0;
  double improvement_p2 = 0.0;
  double current_worst_lambda2 = 0.0;
  JammingPlan attack_plan;
  bool attack_is_best_response = false;
  double tol = 1e-4;
};

// Solves each player's subproblem from the given state and realizes it; the
// state is an equilibrium when neither player improves the attacked
// connectivity by more than tol and the attack plan is a best response.
EquilibriumReport check_meta_equilibrium(const std::vector<AgentState>& agents,
                                         const PlayerParams& p1, const PlayerParams& p2,
                                         const WeightParams& weight_params, const AttackSpec& attack,
                                         double tol, const EngineParams& engine);

struct AnticipationComparison {
  double lambda2_anticipating = 0.0;  // final network under its worst attack
  double lambda2_naive = 0.0;
  GameTrace trace_anticipating;
  GameTrace trace_naive;
};

// Runs the formation twice (attack anticipation on and off) and subjects both
// final networks to their worst-case attacks.
AnticipationComparison compare_anticipation(const std::vector<AgentState>& initial,
                                            const EngineParams& engine, const PlayerParams& p1,
                                            const PlayerParams& p2,
                                            const WeightParams& weight_params,
                                            const AttackSpec& attack);

}  // namespace masgame
