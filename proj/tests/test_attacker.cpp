#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "attacker.hpp"
#include "oracles.hpp"

using namespace masgame;

TEST_SUITE_BEGIN("attacker");

namespace {

const WeightParams kFig1{0.1, 2.0, 6.0, ArgConvention::SquaredDistance};

CommGraph explicit_graph(int n, const std::vector<std::tuple<int, int, double>>& edges) {
  CommGraph g;
  g.n = n;
  g.layer_partition = {n, 0};
  g.weights = Matrix(n, n);
  g.laplacian = Matrix(n, n);
  for (const auto& [i, j, w] : edges) {
    g.weights(i - 1, j - 1) = w;
    g.weights(j - 1, i - 1) = w;
    g.laplacian(i - 1, j - 1) -= w;
    g.laplacian(j - 1, i - 1) -= w;
    g.laplacian(i - 1, i - 1) += w;
    g.laplacian(j - 1, j - 1) += w;
  }
  return g;
}

AttackActionSpace full_space(const CommGraph& g, int psi) {
  AttackActionSpace s;
  s.candidate_links = positive_links(g);
  s.budget_psi = psi;
  return s;
}

// Independent subset enumeration using the oracle eigensolver.
double exhaustive_min_lambda2(const CommGraph& g, const std::vector<Link>& candidates, int psi) {
  const int m = static_cast<int>(candidates.size());
  double best = 1e300;
  std::vector<int> pick(psi);
  for (int t = 0; t < psi; ++t) pick[t] = t;
  while (true) {
    CommGraph cur = g;
    for (int t = 0; t < psi; ++t) {
      const Link& l = candidates[pick[t]];
      cur = remove_link_laplacian(cur, l.i, l.j);
    }
    double lam = oracle::lambda_k(cur.laplacian, 1);
    if (lam < kDisconnectedTol) lam = 0.0;
    best = std::min(best, lam);
    if (psi == 0) break;
    int t = psi - 1;
    while (t >= 0 && pick[t] == m - psi + t) --t;
    if (t < 0) break;
    ++pick[t];
    for (int s = t + 1; s < psi; ++s) pick[s] = pick[s - 1] + 1;
  }
  return best;
}

}  // namespace

TEST_CASE("worst_case_attack on K2 removes the only link") {
  const CommGraph g = explicit_graph(2, {{1, 2, 1.0}});
  const JammingPlan plan = worst_case_attack(g, full_space(g, 1));
  REQUIRE(plan.removed.size() == 1);
  CHECK(plan.removed[0] == Link(1, 2));
  CHECK(plan.resulting_lambda2 == 0.0);
}

TEST_CASE("worst_case_attack prefers disconnecting the weak pendant edge") {
  // Unit triangle 1-2-3 plus pendant 4 attached to 1 with weight 0.1.
  const CommGraph g = explicit_graph(4, {{1, 2, 1.0}, {1, 3, 1.0}, {2, 3, 1.0}, {1, 4, 0.1}});
  const JammingPlan plan = worst_case_attack(g, full_space(g, 1));
  REQUIRE(plan.removed.size() == 1);
  CHECK(plan.removed[0] == Link(1, 4));
  CHECK(plan.resulting_lambda2 == 0.0);
  // Independent enumeration confirms no single removal does better.
  CHECK(exhaustive_min_lambda2(g, positive_links(g), 1) == 0.0);
}

TEST_CASE("worst_case_attack throws when the budget exceeds the candidates") {
  const CommGraph g = explicit_graph(2, {{1, 2, 1.0}});
  CHECK_THROWS_AS(worst_case_attack(g, full_space(g, 2)), BudgetExceedsLinks);
}

TEST_CASE("budget zero evaluates the nominal graph") {
  const CommGraph g = explicit_graph(2, {{1, 2, 1.0}});
  const JammingPlan plan = worst_case_attack(g, full_space(g, 0));
  CHECK(plan.removed.empty());
  CHECK(plan.resulting_lambda2 == doctest::Approx(2.0));
}

TEST_CASE("greedy_attack on the unit 3-path breaks the tie toward link (1,2)") {
  const CommGraph g = explicit_graph(3, {{1, 2, 1.0}, {2, 3, 1.0}});
  const JammingPlan plan = greedy_attack(g, full_space(g, 1));
  REQUIRE(plan.removed.size() == 1);
  CHECK(plan.removed[0] == Link(1, 2));
  CHECK(plan.resulting_lambda2 == 0.0);
}

TEST_CASE("greedy_attack on K2 removes the only link") {
  const CommGraph g = explicit_graph(2, {{1, 2, 1.0}});
  const JammingPlan plan = greedy_attack(g, full_space(g, 1));
  REQUIRE(plan.removed.size() == 1);
  CHECK(plan.removed[0] == Link(1, 2));
}

TEST_CASE("greedy_attack on the weighted triangle matches the enumeration oracle") {
  const CommGraph g = explicit_graph(3, {{1, 2, 1.0}, {1, 3, 1.0}, {2, 3, 0.2}});
  const JammingPlan greedy = greedy_attack(g, full_space(g, 1));
  const JammingPlan worst = worst_case_attack(g, full_space(g, 1));
  CHECK(greedy.resulting_lambda2 == doctest::Approx(worst.resulting_lambda2).epsilon(1e-9));
  CHECK(greedy.removed[0] == worst.removed[0]);
}

TEST_CASE("greedy respects the single-removal spectral bound") {
  oracle::Rng rng(53);
  for (int trial = 0; trial < 20; ++trial) {
    const auto agents = oracle::random_agents(rng, 2, rng.uniform_int(2, 5), 2.5, 0.35, 1.0);
    const CommGraph g = build_graph(agents, kFig1);
    const auto links = positive_links(g);
    if (links.empty()) continue;
    const SpectralResult s = algebraic_connectivity(g);
    const JammingPlan plan = greedy_attack(g, full_space(g, 1));
    REQUIRE(plan.removed.size() == 1);
    const Link l = plan.removed[0];
    const double w = g.weights(l.i - 1, l.j - 1);
    const double du = s.fiedler[l.i - 1] - s.fiedler[l.j - 1];
    CHECK(plan.resulting_lambda2 <= s.lambda2 - w * du * du + 1e-9);
  }
}

TEST_CASE("worst_case_attack is minimal over every same-size removal set") {
  oracle::Rng rng(59);
  int cases = 0;
  for (int trial = 0; trial < 60 && cases < 12; ++trial) {
    const auto agents = oracle::random_agents(rng, 1, rng.uniform_int(3, 4), 2.2, 0.4, 1.0);
    const CommGraph g = build_graph(agents, kFig1);
    const auto links = positive_links(g);
    if (links.size() < 2 || links.size() > 8) continue;
    ++cases;
    for (int psi = 1; psi <= 2; ++psi) {
      if (psi > static_cast<int>(links.size())) continue;
      const JammingPlan plan = worst_case_attack(g, full_space(g, psi));
      const double oracle_min = exhaustive_min_lambda2(g, links, psi);
      CHECK(plan.resulting_lambda2 <= oracle_min + 1e-9);
      CHECK(plan.resulting_lambda2 >= oracle_min - 1e-9);
      // Exhaustive never loses to greedy.
      const JammingPlan greedy = greedy_attack(g, full_space(g, psi));
      CHECK(plan.resulting_lambda2 <= greedy.resulting_lambda2 + 1e-12);
    }
  }
  CHECK(cases >= 8);
}

TEST_CASE("attack plans are deterministic") {
  oracle::Rng rng(61);
  const auto agents = oracle::random_agents(rng, 2, 4, 2.5, 0.4, 1.0);
  const CommGraph g = build_graph(agents, kFig1);
  const auto space = full_space(g, std::min<int>(2, positive_links(g).size()));
  const JammingPlan a = worst_case_attack(g, space);
  const JammingPlan b = worst_case_attack(g, space);
  CHECK(a.removed == b.removed);
  CHECK(a.resulting_lambda2 == b.resulting_lambda2);
  const JammingPlan c = greedy_attack(g, space);
  const JammingPlan d = greedy_attack(g, space);
  CHECK(c.removed == d.removed);
}

TEST_CASE("select_spoof_target: K2 ties break to the lowest id") {
  const CommGraph g = explicit_graph(2, {{1, 2, 1.0}});
  CHECK(select_spoof_target(g) == 1);
}

TEST_CASE("select_spoof_target picks the hub of a star") {
  const CommGraph g = explicit_graph(5, {{3, 1, 1.0}, {3, 2, 1.0}, {3, 4, 1.0}, {3, 5, 1.0}});
  int best = 1;
  double best_deg = -1.0;
  for (int i = 0; i < g.n; ++i) {
    double deg = 0.0;
    for (int j = 0; j < g.n; ++j) deg += g.weights(i, j);
    if (deg > best_deg + 1e-12) {
      best_deg = deg;
      best = i + 1;
    }
  }
  CHECK(best == 3);
  CHECK(select_spoof_target(g) == 3);
}

TEST_CASE("apply_spoof adds the disturbance componentwise") {
  const Vec3 a = apply_spoof({1, 2, 3}, {0, 0, 0});
  CHECK(a.x == 1.0);
  CHECK(a.y == 2.0);
  CHECK(a.z == 3.0);
  const Vec3 b = apply_spoof({0, 0, 0}, {0.1, 0.2, 0.0});
  CHECK(b.x == doctest::Approx(0.1));
  CHECK(b.y == doctest::Approx(0.2));
  CHECK(b.z == 0.0);
}

TEST_CASE("candidate_links honors filters and secure exclusions") {
  std::vector<AgentState> agents = {
      {1, Layer::L1, {0, 0, 1}}, {2, Layer::L2, {0, 0, 0}}, {3, Layer::L2, {1, 0, 0}}};
  const CommGraph g = build_graph(agents, kFig1);
  AttackSpec spec;
  spec.filter = CandidateFilter::All;
  CHECK(candidate_links(g, spec).size() == 3);
  spec.filter = CandidateFilter::InterLayerOnly;
  const auto cross = candidate_links(g, spec);
  REQUIRE(cross.size() == 2);
  CHECK(cross[0] == Link(1, 2));
  CHECK(cross[1] == Link(1, 3));
  spec.filter = CandidateFilter::All;
  spec.secure_links.insert(Link(2, 3));
  CHECK(candidate_links(g, spec).size() == 2);
  spec.filter = CandidateFilter::Explicit;
  spec.explicit_links = {Link(1, 2)};
  CHECK(candidate_links(g, spec).size() == 1);
  spec.budget_psi = 5;
  CHECK(derive_space(g, spec).budget_psi == 1);
}

TEST_SUITE_END();
