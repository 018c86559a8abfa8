#pragma once

#include <optional>
#include <vector>

#include "graph_core.hpp"

namespace masgame {

struct AttackActionSpace {
  std::vector<Link> candidate_links;  // sorted ascending
  int budget_psi = 1;                 // 0 means "no attack" (nominal evaluation)
};

// Scenario-level description of which links an adversary may jam. Concrete
// candidate sets are derived per graph state, since link existence follows
// the agents around.
enum class CandidateFilter { All, InterLayerOnly, Explicit };

struct AttackSpec {
  int budget_psi = 1;
  CandidateFilter filter = CandidateFilter::All;
  std::vector<Link> explicit_links;  // for CandidateFilter::Explicit
  LinkSet secure_links;              // never attackable
};

// Positive-weight links of g matched by the filter, minus secure links.
std::vector<Link> candidate_links(const CommGraph& g, const AttackSpec& spec);

// Concrete action space for g; the budget is clamped to the candidate count.
AttackActionSpace derive_space(const CommGraph& g, const AttackSpec& spec);

struct JammingPlan {
  std::vector<Link> removed;
  double resulting_lambda2 = 0.0;
};

struct SpoofingPlan {
  int target = 0;
  int start_step = 0;
  int duration = 0;  // g_a
  std::vector<Vec3> disturbances;
};

// Exhaustive minimization of lambda2 over all budget-sized removal subsets.
// Ties (within 1e-9) break lexicographically on the sorted link list.
JammingPlan worst_case_attack(const CommGraph& g, const AttackActionSpace& space);

// Iterated Fiedler heuristic: repeatedly drop the candidate maximizing
// w_ij (u_i - u_j)^2, recomputing u after each removal.
JammingPlan greedy_attack(const CommGraph& g, const AttackActionSpace& space);

// Agent with the largest weighted degree; lowest id on ties.
int select_spoof_target(const CommGraph& g);

Vec3 apply_spoof(const Vec3& pos, const Vec3& eps);

}  // namespace masgame
