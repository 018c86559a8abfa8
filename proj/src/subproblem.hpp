#pragma once

#include <set>
#include <vector>

#include "attacker.hpp"
#include "conic.hpp"
#include "dynamics.hpp"
#include "graph_core.hpp"

namespace masgame {

enum class Player { P1, P2 };

struct PlayerParams {
  Player player = Player::P1;
  double rho_intra = 1.0;  // minimum distance inside the player's layer
  double rho_cross = 1.0;  // minimum distance across layers
  double d_max = 0.2;      // per-update displacement cap
  int period = 1;          // update period in engine steps

  void validate() const;
};

struct AssembleOptions {
  bool planar_layers = true;  // pin each moving agent's vertical coordinate
};

// Builds the player's per-update program: one PSD block per anticipated
// removal scenario (lambda2 epigraph), the distance-matrix PSD block, the
// position/distance coupling equalities, minimum-separation inequalities and
// per-agent displacement cones. Agents in `frozen` are treated as constants.
//
// space.budget_psi = 0 assembles the single no-removal scenario.
ConicProgram assemble_player_problem(const std::vector<AgentState>& agents,
                                     const PlayerParams& params, const WeightParams& weight_params,
                                     const AttackActionSpace& space, const std::set<int>& frozen = {},
                                     const AssembleOptions& options = {});

struct RealizeResult {
  bool accepted = false;
  double scale = 0.0;  // accepted displacement scale in {1, 0.5, 0.25, 0.125, 0}
  std::vector<AgentState> agents;
  double realized_worst_lambda2 = 0.0;
};

// Re-evaluates a solver step against the true (non-linearized) constraints
// and the true attacked connectivity; backtracks the displacement by factors
// {0.5, 0.25, 0.125, 0} until both the separation/displacement checks and the
// monotone-connectivity check pass. Scale 0 (stay put) always passes.
//
// The attacked connectivity is measured with `objective_space` re-derived on
// each candidate graph: candidates are the currently positive links matched
// by the caller's filter, the budget clamped to their count.
RealizeResult verify_and_realize(const std::vector<AgentState>& agents_old,
                                 const ConicSolution& sol, const PlayerParams& params,
                                 const WeightParams& weight_params, const AttackSpec& objective_space,
                                 const std::set<int>& frozen = {});

// Worst-case lambda2 of the graph built from `agents` under `spec`
// (budget clamped to the number of available candidates).
double attacked_lambda2(const std::vector<AgentState>& agents, const WeightParams& weight_params,
                        const AttackSpec& spec);

// Assembles and solves one player update in centroid-centered coordinates,
// translating the proposal back. The program data becomes invariant under
// global translations, which both keeps the equilibrium test
// translation-invariant and avoids large absolute coordinates in the
// coupling rows.
ConicSolution solve_player_step(const std::vector<AgentState>& agents, const PlayerParams& params,
                                const WeightParams& weight_params, const AttackActionSpace& space,
                                const std::set<int>& frozen = {},
                                const AssembleOptions& options = {});

}  // namespace masgame
