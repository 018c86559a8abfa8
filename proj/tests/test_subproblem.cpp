#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "subproblem.hpp"

using namespace masgame;

TEST_SUITE_BEGIN("subproblem");

namespace {

const WeightParams kFig1{0.1, 2.0, 6.0, ArgConvention::SquaredDistance};

PlayerParams player(Player who, double d_max, double rho = 0.3) {
  PlayerParams p;
  p.player = who;
  p.rho_intra = rho;
  p.rho_cross = rho;
  p.d_max = d_max;
  p.period = 1;
  return p;
}

int count_label(const ConicProgram& prog, const std::string& prefix) {
  int count = 0;
  for (const auto& blk : prog.lmi_blocks)
    if (blk.label.rfind(prefix, 0) == 0) ++count;
  return count;
}

std::vector<AgentState> two_layer_cluster() {
  // 2 upper + 6 lower agents, dense enough for 20+ links.
  return {{1, Layer::L1, {1.0, 0.5, 1.2}}, {2, Layer::L1, {2.0, 0.5, 1.2}},
          {3, Layer::L2, {0.0, 0.0, 0.0}}, {4, Layer::L2, {1.0, 0.0, 0.0}},
          {5, Layer::L2, {2.0, 0.0, 0.0}}, {6, Layer::L2, {0.5, 1.0, 0.0}},
          {7, Layer::L2, {1.5, 1.0, 0.0}}, {8, Layer::L2, {2.5, 1.0, 0.0}}};
}

}  // namespace

TEST_CASE("assembly counts: C(20,1) attack blocks, one EDM block, 8 diagonal pins") {
  const auto agents = two_layer_cluster();
  const CommGraph g = build_graph(agents, kFig1);
  auto links = positive_links(g);
  REQUIRE(links.size() >= 20);
  links.resize(20);
  AttackActionSpace space;
  space.candidate_links = links;
  space.budget_psi = 1;
  const ConicProgram prog = assemble_player_problem(agents, player(Player::P1, 0.2), kFig1, space);
  CHECK(count_label(prog, "removal_scenario") == 20);
  CHECK(count_label(prog, "distance_matrix") == 1);
  int diag_pins = 0;
  for (const auto& zv : prog.z_entries)
    if (zv.i == zv.j) ++diag_pins;
  CHECK(diag_pins == 8);
  CHECK(prog.soc_blocks.size() == 2);  // the two moving upper agents
  CHECK(prog.positions.size() == 2);
}

TEST_CASE("assembly counts: C(6,2) = 15 attack blocks") {
  const auto agents = two_layer_cluster();
  const CommGraph g = build_graph(agents, kFig1);
  AttackSpec spec;
  spec.filter = CandidateFilter::InterLayerOnly;
  spec.budget_psi = 2;
  auto links = candidate_links(g, spec);
  REQUIRE(links.size() >= 6);
  links.resize(6);
  AttackActionSpace space;
  space.candidate_links = links;
  space.budget_psi = 2;
  const ConicProgram prog = assemble_player_problem(agents, player(Player::P2, 0.2), kFig1, space);
  CHECK(count_label(prog, "removal_scenario") == 15);
  CHECK(prog.soc_blocks.size() == 6);
}

TEST_CASE("everything frozen: optimum alpha equals the worst-case lambda2") {
  const auto agents = two_layer_cluster();
  const CommGraph g = build_graph(agents, kFig1);
  AttackActionSpace space = derive_space(g, AttackSpec{1, CandidateFilter::All, {}, {}});
  std::set<int> frozen = {1, 2};  // P1's whole layer
  const ConicProgram prog =
      assemble_player_problem(agents, player(Player::P1, 0.2), kFig1, space, frozen);
  CHECK(prog.positions.empty());
  const ConicSolution sol = solve_conic(prog);
  REQUIRE(sol.status == SolveStatus::Optimal);
  const JammingPlan worst = worst_case_attack(g, space);
  CHECK(std::fabs(sol.alpha - worst.resulting_lambda2) < 1e-5);
}

TEST_CASE("pinned robots (d_max = 0): alpha* equals min-over-removals lambda2") {
  oracle::Rng rng(107);
  int done = 0;
  for (int trial = 0; trial < 60 && done < 20; ++trial) {
    const int n2 = rng.uniform_int(2, 4);
    const auto agents = oracle::random_agents(rng, 2, n2, 2.4, 0.45, 1.0);
    if (static_cast<int>(agents.size()) != 2 + n2) continue;
    const CommGraph g = build_graph(agents, kFig1);
    const auto links = positive_links(g);
    if (links.empty() || oracle::lambda_k(g.laplacian, 1) < 1e-4) continue;
    AttackActionSpace space;
    space.candidate_links = links;
    space.budget_psi = 1;
    const ConicProgram prog =
        assemble_player_problem(agents, player(Player::P1, 0.0), kFig1, space);
    const ConicSolution sol = solve_conic(prog);
    REQUIRE(sol.status == SolveStatus::Optimal);
    // Independent oracle: enumerate removals with bisection eigenvalues.
    double expect = 1e300;
    for (const Link& l : links) {
      double lam = oracle::lambda_k(remove_link_laplacian(g, l.i, l.j).laplacian, 1);
      if (lam < kDisconnectedTol) lam = 0.0;
      expect = std::min(expect, lam);
    }
    CHECK(std::fabs(sol.alpha - expect) < 1e-5);
    ++done;
  }
  CHECK(done == 20);
}

TEST_CASE("contradictory separation bound yields Infeasible") {
  std::vector<AgentState> agents = {{1, Layer::L1, {0, 0, 0}}, {2, Layer::L1, {1, 0, 0}}};
  const CommGraph g = build_graph(agents, kFig1);
  AttackActionSpace space;
  space.candidate_links = positive_links(g);
  space.budget_psi = 0;
  ConicProgram prog = assemble_player_problem(agents, player(Player::P1, 0.0), kFig1, space);
  // Z_12 is pinned to 1 by the zero-motion coupling; demand Z_12 >= 100.
  AffineExpr ge;
  for (const auto& zv : prog.z_entries)
    if (zv.i == 0 && zv.j == 1) ge.add_term(zv.var, 1.0);
  ge.constant = -100.0;
  prog.lin_ineq.push_back(ge);
  CHECK(solve_conic(prog).status == SolveStatus::Infeasible);
}

TEST_CASE("assemble rejects a start that violates the separations") {
  std::vector<AgentState> agents = {{1, Layer::L1, {0, 0, 0}}, {2, Layer::L1, {0.1, 0, 0}}};
  AttackActionSpace space;
  space.budget_psi = 0;
  CHECK_THROWS_AS(
      assemble_player_problem(agents, player(Player::P1, 0.2, 1.0), kFig1, space),
      InfeasibleStart);
}

TEST_CASE("full motion subproblem solves and the realized step never regresses") {
  const auto agents = two_layer_cluster();
  const CommGraph g = build_graph(agents, kFig1);
  const AttackSpec spec{1, CandidateFilter::All, {}, {}};
  const AttackActionSpace space = derive_space(g, spec);
  for (Player who : {Player::P1, Player::P2}) {
    const PlayerParams params = player(who, 0.2);
    const ConicProgram prog = assemble_player_problem(agents, params, kFig1, space);
    const ConicSolution sol = solve_conic(prog);
    // The distance-matrix block keeps these programs on a face of the cone;
    // the solver may report a near-optimal iterate rather than Optimal.
    REQUIRE((sol.status == SolveStatus::Optimal ||
             (sol.kkt.primal <= 1e-6 && sol.kkt.gap <= 1e-3)));
    const double before = attacked_lambda2(agents, kFig1, spec);
    const RealizeResult rr = verify_and_realize(agents, sol, params, kFig1, spec);
    CHECK(rr.accepted);
    CHECK(rr.realized_worst_lambda2 >= before - 1e-9);
    for (size_t i = 0; i < agents.size(); ++i) {
      const double moved = (rr.agents[i].position - agents[i].position).norm();
      CHECK(moved <= params.d_max + 1e-9);
      CHECK(rr.agents[i].position.z == doctest::Approx(agents[i].position.z));  // planar
    }
    for (size_t i = 0; i < agents.size(); ++i)
      for (size_t j = i + 1; j < agents.size(); ++j) {
        const double dist = (rr.agents[i].position - rr.agents[j].position).norm();
        CHECK(dist >= 0.3 - 1e-9);
      }
  }
}

TEST_CASE("verify_and_realize: zero displacement is accepted unchanged") {
  const auto agents = two_layer_cluster();
  const AttackSpec spec{1, CandidateFilter::All, {}, {}};
  ConicSolution sol;
  sol.status = SolveStatus::Optimal;
  for (const auto& a : agents)
    if (a.layer == Layer::L1) sol.new_positions.push_back({a.id, a.position});
  const double before = attacked_lambda2(agents, kFig1, spec);
  const RealizeResult rr =
      verify_and_realize(agents, sol, player(Player::P1, 0.2), kFig1, spec);
  CHECK(rr.accepted);
  CHECK(rr.scale == 1.0);
  CHECK(rr.realized_worst_lambda2 == doctest::Approx(before));
}

TEST_CASE("verify_and_realize backtracks a step that violates the true separation") {
  // Proposed positions sit just inside rho of a neighbor: full scale must be
  // rejected, a scaled-down step accepted.
  std::vector<AgentState> agents = {{1, Layer::L1, {0, 0, 1.0}},
                                    {2, Layer::L1, {1.0, 0, 1.0}},
                                    {3, Layer::L2, {0, 0, 0}},
                                    {4, Layer::L2, {1.0, 0, 0}}};
  const AttackSpec spec{0, CandidateFilter::All, {}, {}};
  PlayerParams params = player(Player::P1, 0.5, 0.8);
  ConicSolution sol;
  sol.status = SolveStatus::Optimal;
  // Agent 2 steps toward agent 1, ending at distance 0.75 < rho = 0.8.
  sol.new_positions.push_back({1, Vec3(0, 0, 1.0)});
  sol.new_positions.push_back({2, Vec3(0.75, 0, 1.0)});
  const RealizeResult rr = verify_and_realize(agents, sol, params, kFig1, spec);
  CHECK(rr.accepted);
  CHECK(rr.scale < 1.0);
  const double dist = (rr.agents[0].position - rr.agents[1].position).norm();
  CHECK(dist >= 0.8 - 1e-9);
}

TEST_CASE("materialized squared distances pass the centered PSD test; violators fail") {
  oracle::Rng rng(109);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = rng.uniform_int(4, 8);
    std::vector<AgentState> agents;
    for (int i = 0; i < n; ++i)
      agents.push_back({i + 1, Layer::L1,
                        Vec3(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3))});
    const DistanceState st = DistanceState::from_positions(agents);
    Matrix c(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) c(i, j) = (i == j ? 1.0 : 0.0) - 1.0 / n;
    Matrix neg = c * st.Z * c;
    neg = neg * -1.0;
    CHECK(oracle::lambda_k(neg, 0) >= -1e-9);
    for (int i = 0; i < n; ++i) CHECK(st.Z(i, i) == 0.0);

    // Break the triangle inequality hard: d(0,1)=d(1,2)=1 but d(0,2)=9.
    Matrix bad = st.Z;
    bad(0, 1) = bad(1, 0) = 1.0;
    bad(1, 2) = bad(2, 1) = 1.0;
    bad(0, 2) = bad(2, 0) = 81.0;
    Matrix negbad = c * bad * c;
    negbad = negbad * -1.0;
    CHECK(oracle::lambda_k(negbad, 0) < -1e-9);
  }
}

TEST_SUITE_END();
