#include "game_engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "util.hpp"

namespace masgame {

namespace {

// Realized per-update connectivity gains below this are treated as noise.
constexpr double kMinRealizedGain = 1e-6;

std::vector<Vec3> positions_of(const std::vector<AgentState>& agents) {
  std::vector<Vec3> p;
  p.reserve(agents.size());
  for (const auto& a : agents) p.push_back(a.position);
  return p;
}

double max_displacement(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, (a[i] - b[i]).inf_norm());
  return m;
}

void check_start_feasible(const std::vector<AgentState>& agents, const PlayerParams& p1,
                          const PlayerParams& p2) {
  const int n = static_cast<int>(agents.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dist = (agents[i].position - agents[j].position).norm();
      double rho;
      if (agents[i].layer != agents[j].layer)
        rho = std::max(p1.rho_cross, p2.rho_cross);
      else
        rho = agents[i].layer == Layer::L1 ? p1.rho_intra : p2.rho_intra;
      if (dist < rho - 1e-9)
        throw InfeasibleStart("initial agents " + std::to_string(agents[i].id) + " and " +
                              std::to_string(agents[j].id) + " violate the minimum separation");
    }
  }
}

AttackSpec nominal_spec(const AttackSpec& spec) {
  AttackSpec naive = spec;
  naive.budget_psi = 0;
  return naive;
}

}  // namespace

void EngineParams::validate() const {
  if (period_1 < 1 || period_2 < 1) throw ValidationError("update periods must be at least 1");
  if (!(kappa > 0.0)) throw ValidationError("kappa must be positive");
  if (max_steps < 1) throw ValidationError("max_steps must be at least 1");
}

GameTrace run(const std::vector<AgentState>& initial, const EngineParams& engine,
              const PlayerParams& p1, const PlayerParams& p2, const WeightParams& weight_params,
              const AttackSpec& attack, const std::optional<SpoofSpec>& spoof) {
  engine.validate();
  p1.validate();
  p2.validate();
  weight_params.validate();

  std::vector<AgentState> live = initial;
  validate_agents(live);
  check_start_feasible(live, p1, p2);

  GameTrace trace;
  const AttackSpec objective_spec = engine.anticipate_attacks ? attack : nominal_spec(attack);

  auto record_state = [&](int step) {
    StepRecord rec;
    rec.step = step;
    rec.agents = live;
    const CommGraph g = build_graph(live, weight_params);
    rec.lambda2_nominal = algebraic_connectivity(g).lambda2;
    rec.lambda2_worst = worst_case_attack(g, derive_space(g, attack)).resulting_lambda2;
    return rec;
  };

  trace.steps.push_back(record_state(0));

  // History of start-of-step positions; index k-1 holds the state entering
  // step k. Lookups before step 1 return half the initial positions (the
  // seeding that keeps the first update gates open).
  std::vector<std::vector<Vec3>> history;
  history.push_back(positions_of(live));
  std::vector<Vec3> seeded_half = history.front();
  for (auto& v : seeded_half) v = v * 0.5;
  auto history_at = [&](int step) -> const std::vector<Vec3>& {
    // positions entering `step`; step <= 0 yields the seeded virtual state
    if (step < 1) return seeded_half;
    return history[static_cast<size_t>(step - 1)];
  };

  SpoofingPlan plan;
  bool plan_ready = false;
  Vec3 spoof_reset_position;

  for (int k = 1; k <= engine.max_steps; ++k) {
    StepRecord rec;
    rec.step = k;

    std::set<int> frozen;
    if (spoof && k >= spoof->start_step && k < spoof->start_step + spoof->duration) {
      if (!plan_ready) {
        plan.start_step = spoof->start_step;
        plan.duration = spoof->duration;
        if (spoof->explicit_target)
          plan.target = *spoof->explicit_target;
        else
          plan.target = select_spoof_target(build_graph(live, weight_params));
        SplitMix64 rng(engine.seed ^ 0x5b00f5b00fULL);
        plan.disturbances.clear();
        for (int s = 0; s < plan.duration; ++s)
          plan.disturbances.push_back(Vec3(rng.uniform(0.0, spoof->disturbance_range),
                                           rng.uniform(0.0, spoof->disturbance_range), 0.0));
        plan_ready = true;
        trace.spoofed = true;
        trace.spoof_plan = plan;
        spoof_reset_position = live[plan.target - 1].position;
        trace.events.push_back("[step " + std::to_string(k) + "] spoofing window opened on agent " +
                               std::to_string(plan.target));
      }
      const Vec3 eps = plan.disturbances[k - plan.start_step];
      live[plan.target - 1].position = apply_spoof(live[plan.target - 1].position, eps);
      frozen.insert(plan.target);
      rec.spoof_active = true;
      rec.spoof_target = plan.target;
      {
        const CommGraph g = build_graph(live, weight_params);
        rec.lambda2_worst_post_spoof =
            worst_case_attack(g, derive_space(g, attack)).resulting_lambda2;
      }
    } else if (plan_ready && spoof && k == spoof->start_step + spoof->duration) {
      // Detection: the operator reboots the compromised agent, returning it
      // to its pre-attack state.
      live[plan.target - 1].position = spoof_reset_position;
      trace.events.push_back("[step " + std::to_string(k) + "] spoofing window closed; agent " +
                             std::to_string(plan.target) + " rebooted");
    }

    auto player_turn = [&](const PlayerParams& params, int period, StepRecord::PlayerDiag& diag,
                           bool& acted_flag) {
      if (k % period != 0) return;
      if (max_displacement(positions_of(live), history_at(k - period)) <= engine.kappa) return;
      try {
        const CommGraph g = build_graph(live, weight_params);
        // While the anticipated attack still disconnects the network the
        // epigraph objective is identically zero and gives no motion signal;
        // among its optima, prefer the one improving the nominal
        // connectivity until the anticipated worst case becomes positive.
        AttackSpec step_spec = objective_spec;
        if (attacked_lambda2(live, weight_params, objective_spec) < kDisconnectedTol)
          step_spec = nominal_spec(objective_spec);
        const AttackActionSpace model_space = derive_space(g, step_spec);
        AssembleOptions opts;
        opts.planar_layers = engine.planar_layers;
        const ConicSolution sol =
            solve_player_step(live, params, weight_params, model_space, frozen, opts);
        diag.solved = true;
        diag.status = sol.status;
        diag.iterations = sol.iterations;
        diag.model_alpha = sol.alpha;
        diag.kkt = sol.kkt;
        // A near-feasible iterate is still a usable step proposal; the
        // realization guard re-checks the true constraints either way.
        diag.usable = sol.status == SolveStatus::Optimal ||
                      (sol.kkt.primal <= 1e-6 && sol.kkt.gap <= 5e-2);
        if (!diag.usable) {
          char buf[160];
          std::snprintf(buf, sizeof(buf),
                        "[step %d] player %d solve ended %s (kkt %.1e/%.1e/%.1e); holding position",
                        k, params.player == Player::P1 ? 1 : 2, to_string(sol.status),
                        sol.kkt.primal, sol.kkt.dual, sol.kkt.gap);
          trace.events.push_back(buf);
          return;
        }
        const double prev = attacked_lambda2(live, weight_params, step_spec);
        const RealizeResult rr =
            verify_and_realize(live, sol, params, weight_params, step_spec, frozen);
        diag.scale = rr.scale;
        // Sub-threshold gains are plateau noise: creeping along them keeps
        // the displacement above kappa forever without measurable progress.
        if (rr.scale > 0.0 && rr.realized_worst_lambda2 - prev < kMinRealizedGain) {
          diag.scale = 0.0;
          return;
        }
        live = rr.agents;
        acted_flag = true;
        if (rr.scale < 1.0)
          trace.events.push_back("[step " + std::to_string(k) + "] player " +
                                 (params.player == Player::P1 ? std::string("1") : std::string("2")) +
                                 " backtracked to scale " + std::to_string(rr.scale));
      } catch (const InfeasibleStart& e) {
        trace.events.push_back("[step " + std::to_string(k) + "] " + e.what() + "; holding position");
      }
    };

    player_turn(p1, engine.period_1, rec.diag_p1, rec.p1_acted);
    player_turn(p2, engine.period_2, rec.diag_p2, rec.p2_acted);

    history.push_back(positions_of(live));

    const StepRecord metrics = record_state(k);
    rec.agents = metrics.agents;
    rec.lambda2_nominal = metrics.lambda2_nominal;
    rec.lambda2_worst = metrics.lambda2_worst;
    trace.steps.push_back(rec);
    trace.steps_used = k;

    const bool spoof_pending =
        spoof && k < spoof->start_step + spoof->duration;  // do not stop before/inside a window
    const bool solver_blocked = (rec.diag_p1.solved && !rec.diag_p1.usable) ||
                                (rec.diag_p2.solved && !rec.diag_p2.usable);
    if (k > std::max(engine.period_1, engine.period_2) && !spoof_pending && !solver_blocked) {
      const auto& latest = history.back();
      const double d1 = max_displacement(latest, history_at(k + 1 - engine.period_1));
      const double d2 = max_displacement(latest, history_at(k + 1 - engine.period_2));
      if (d1 <= engine.kappa && d2 <= engine.kappa) {
        trace.converged = true;
        trace.events.push_back("[step " + std::to_string(k) + "] converged");
        break;
      }
    }
  }

  return trace;
}

EquilibriumReport check_meta_equilibrium(const std::vector<AgentState>& agents,
                                         const PlayerParams& p1, const PlayerParams& p2,
                                         const WeightParams& weight_params, const AttackSpec& attack,
                                         double tol, const EngineParams& engine) {
  std::vector<AgentState> live = agents;
  validate_agents(live);
  EquilibriumReport report;
  report.tol = tol;

  const AttackSpec objective_spec = engine.anticipate_attacks ? attack : nominal_spec(attack);
  report.current_worst_lambda2 = attacked_lambda2(live, weight_params, objective_spec);

  const CommGraph g = build_graph(live, weight_params);
  const AttackActionSpace space = derive_space(g, objective_spec);

  AssembleOptions opts;
  opts.planar_layers = engine.planar_layers;

  bool inconclusive = false;
  auto improvement = [&](const PlayerParams& params) {
    const ConicSolution sol = solve_player_step(live, params, weight_params, space, {}, opts);
    const bool usable = sol.status == SolveStatus::Optimal ||
                        (sol.kkt.primal <= 1e-6 && sol.kkt.gap <= 5e-2);
    if (!usable) {
      inconclusive = true;
      return 0.0;
    }
    const RealizeResult rr = verify_and_realize(live, sol, params, weight_params, objective_spec, {});
    return rr.realized_worst_lambda2 - report.current_worst_lambda2;
  };
  report.improvement_p1 = improvement(p1);
  report.improvement_p2 = improvement(p2);

  // Attack-side best response, re-verified by literal enumeration.
  const AttackActionSpace full_space = derive_space(g, attack);
  report.attack_plan = worst_case_attack(g, full_space);
  report.attack_is_best_response = true;
  {
    const int m = static_cast<int>(full_space.candidate_links.size());
    const int kpick = full_space.budget_psi;
    std::vector<int> pick(kpick);
    for (int t = 0; t < kpick; ++t) pick[t] = t;
    while (true) {
      CommGraph cur = g;
      for (int t = 0; t < kpick; ++t) {
        const Link& l = full_space.candidate_links[pick[t]];
        cur = remove_link_laplacian(cur, l.i, l.j);
      }
      if (algebraic_connectivity(cur).lambda2 < report.attack_plan.resulting_lambda2 - 1e-9)
        report.attack_is_best_response = false;
      if (kpick == 0) break;
      int t = kpick - 1;
      while (t >= 0 && pick[t] == m - kpick + t) --t;
      if (t < 0) break;
      ++pick[t];
      for (int s = t + 1; s < kpick; ++s) pick[s] = pick[s - 1] + 1;
    }
  }

  report.holds = !inconclusive && report.improvement_p1 <= tol && report.improvement_p2 <= tol &&
                 report.attack_is_best_response;
  return report;
}

AnticipationComparison compare_anticipation(const std::vector<AgentState>& initial,
                                            const EngineParams& engine, const PlayerParams& p1,
                                            const PlayerParams& p2,
                                            const WeightParams& weight_params,
                                            const AttackSpec& attack) {
  AnticipationComparison cmp;
  EngineParams secure = engine;
  secure.anticipate_attacks = true;
  EngineParams naive = engine;
  naive.anticipate_attacks = false;

  cmp.trace_anticipating = run(initial, secure, p1, p2, weight_params, attack);
  cmp.trace_naive = run(initial, naive, p1, p2, weight_params, attack);

  cmp.lambda2_anticipating =
      attacked_lambda2(cmp.trace_anticipating.steps.back().agents, weight_params, attack);
  cmp.lambda2_naive = attacked_lambda2(cmp.trace_naive.steps.back().agents, weight_params, attack);
  return cmp;
}

}  // namespace masgame
