#include "attacker.hpp"

#include <algorithm>
#include <cmath>

namespace masgame {

namespace {

constexpr double kTieTol = 1e-9;

void check_space(const AttackActionSpace& space) {
  if (space.budget_psi < 0) throw BudgetExceedsLinks("attack budget must be nonnegative");
  if (space.budget_psi > static_cast<int>(space.candidate_links.size()))
    throw BudgetExceedsLinks("attack budget " + std::to_string(space.budget_psi) +
                             " exceeds " + std::to_string(space.candidate_links.size()) +
                             " candidate links");
}

bool lex_less(const std::vector<Link>& a, const std::vector<Link>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

CommGraph remove_all(const CommGraph& g, const std::vector<Link>& links) {
  CommGraph cur = g;
  for (const Link& l : links) cur = remove_link_laplacian(cur, l.i, l.j);
  return cur;
}

}  // namespace

JammingPlan worst_case_attack(const CommGraph& g, const AttackActionSpace& space) {
  check_space(space);
  std::vector<Link> candidates = space.candidate_links;
  std::sort(candidates.begin(), candidates.end());
  const int m = static_cast<int>(candidates.size());
  const int k = space.budget_psi;

  JammingPlan best;
  bool have_best = false;

  std::vector<int> pick(k);
  for (int t = 0; t < k; ++t) pick[t] = t;
  while (true) {
    std::vector<Link> removed;
    removed.reserve(k);
    for (int t = 0; t < k; ++t) removed.push_back(candidates[pick[t]]);
    const double lam = algebraic_connectivity(remove_all(g, removed)).lambda2;
    if (!have_best || lam < best.resulting_lambda2 - kTieTol ||
        (lam <= best.resulting_lambda2 + kTieTol && lex_less(removed, best.removed))) {
      best.removed = removed;
      best.resulting_lambda2 = lam;
      have_best = true;
    }
    if (k == 0) break;
    int t = k - 1;
    while (t >= 0 && pick[t] == m - k + t) --t;
    if (t < 0) break;
    ++pick[t];
    for (int s = t + 1; s < k; ++s) pick[s] = pick[s - 1] + 1;
  }
  return best;
}

JammingPlan greedy_attack(const CommGraph& g, const AttackActionSpace& space) {
  check_space(space);
  std::vector<Link> candidates = space.candidate_links;
  std::sort(candidates.begin(), candidates.end());

  CommGraph cur = g;
  JammingPlan plan;
  for (int round = 0; round < space.budget_psi; ++round) {
    const SpectralResult spec = algebraic_connectivity(cur);
    const std::vector<double>& u = spec.fiedler;
    bool have = false;
    Link chosen;
    double best_score = 0.0;
    for (const Link& l : candidates) {
      if (std::find(plan.removed.begin(), plan.removed.end(), l) != plan.removed.end()) continue;
      const double w = cur.weights(l.i - 1, l.j - 1);
      const double du = u[l.i - 1] - u[l.j - 1];
      const double score = w * du * du;
      if (!have || score > best_score + kTieTol ||
          (score >= best_score - kTieTol && l < chosen)) {
        chosen = l;
        best_score = score;
        have = true;
      }
    }
    if (!have) break;  // all candidates already removed
    if (cur.weights(chosen.i - 1, chosen.j - 1) > 0.0)
      cur = remove_link_laplacian(cur, chosen.i, chosen.j);
    plan.removed.push_back(chosen);
  }
  std::sort(plan.removed.begin(), plan.removed.end());
  plan.resulting_lambda2 = algebraic_connectivity(cur).lambda2;
  return plan;
}

std::vector<Link> candidate_links(const CommGraph& g, const AttackSpec& spec) {
  const int n1 = g.layer_partition.first;
  std::vector<Link> out;
  for (const Link& l : positive_links(g)) {
    if (spec.secure_links.count(l)) continue;
    const bool cross = (l.i <= n1) != (l.j <= n1);
    switch (spec.filter) {
      case CandidateFilter::All:
        break;
      case CandidateFilter::InterLayerOnly:
        if (!cross) continue;
        break;
      case CandidateFilter::Explicit:
        if (std::find(spec.explicit_links.begin(), spec.explicit_links.end(), l) ==
            spec.explicit_links.end())
          continue;
        break;
    }
    out.push_back(l);
  }
  return out;
}

AttackActionSpace derive_space(const CommGraph& g, const AttackSpec& spec) {
  AttackActionSpace space;
  space.candidate_links = candidate_links(g, spec);
  space.budget_psi = std::min<int>(spec.budget_psi, static_cast<int>(space.candidate_links.size()));
  return space;
}

int select_spoof_target(const CommGraph& g) {
  int best = 1;
  double best_deg = -1.0;
  for (int i = 0; i < g.n; ++i) {
    const double deg = g.laplacian(i, i);
    if (deg > best_deg + kTieTol) {
      best_deg = deg;
      best = i + 1;
    }
  }
  return best;
}

Vec3 apply_spoof(const Vec3& pos, const Vec3& eps) { return pos + eps; }

}  // namespace masgame
