#include "subproblem.hpp"

#include <algorithm>
#include <cmath>

namespace masgame {

namespace {

constexpr double kRealizeTol = 1e-9;

Matrix centering_matrix(int n) {
  Matrix c(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) c(i, j) = (i == j ? 1.0 : 0.0) - 1.0 / n;
  return c;
}

// (e_i - e_j)(e_i - e_j)^T
Matrix edge_matrix(int n, int i, int j) {
  Matrix m(n, n);
  m(i, i) = 1.0;
  m(j, j) = 1.0;
  m(i, j) = -1.0;
  m(j, i) = -1.0;
  return m;
}

}  // namespace

void PlayerParams::validate() const {
  if (!(rho_intra > 0.0)) throw ValidationError("rho_intra must be positive");
  if (!(rho_cross > 0.0)) throw ValidationError("rho_cross must be positive");
  if (!(d_max >= 0.0)) throw ValidationError("d_max must be nonnegative");
  if (period < 1) throw ValidationError("period must be at least 1");
}

ConicProgram assemble_player_problem(const std::vector<AgentState>& agents,
                                     const PlayerParams& params, const WeightParams& weight_params,
                                     const AttackActionSpace& space, const std::set<int>& frozen,
                                     const AssembleOptions& options) {
  params.validate();
  weight_params.validate();
  std::vector<AgentState> sorted = agents;
  const auto partition = validate_agents(sorted);
  const int n = static_cast<int>(sorted.size());
  const int n1 = partition.first;
  const Layer own_layer = params.player == Player::P1 ? Layer::L1 : Layer::L2;

  if (space.budget_psi < 0 || space.budget_psi > static_cast<int>(space.candidate_links.size()))
    throw BudgetExceedsLinks("attack budget exceeds candidate links");

  std::vector<bool> moving(n, false);
  for (int i = 0; i < n; ++i)
    moving[i] = sorted[i].layer == own_layer && !frozen.count(sorted[i].id);

  const auto in_own_layer = [&](int i) { return sorted[i].layer == own_layer; };
  const auto cur_sqdist = [&](int i, int j) {
    return (sorted[i].position - sorted[j].position).squared_norm();
  };

  // Start-state feasibility for the separations this program enforces.
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (!moving[i] && !moving[j]) continue;
      const bool same_layer = in_own_layer(i) && in_own_layer(j);
      const bool cross = (i < n1) != (j < n1);
      if (!same_layer && !cross) continue;
      if (frozen.count(sorted[i].id) || frozen.count(sorted[j].id)) continue;
      const double rho = same_layer ? params.rho_intra : params.rho_cross;
      if (std::sqrt(cur_sqdist(i, j)) < rho - kRealizeTol)
        throw InfeasibleStart("agents " + std::to_string(i + 1) + " and " + std::to_string(j + 1) +
                              " start closer than the minimum separation");
    }
  }

  ConicProgram prog;
  prog.n_agents = n;
  prog.alpha_var = prog.new_var();

  std::vector<int> pos_var(n, -1);
  for (int i = 0; i < n; ++i) {
    if (!moving[i]) continue;
    const int v = prog.num_vars;
    prog.num_vars += 3;
    pos_var[i] = v;
    prog.positions.push_back({sorted[i].id, v});
  }

  std::vector<std::vector<int>> zvar(n, std::vector<int>(n, -1));
  for (int i = 0; i < n; ++i) {
    const int v = prog.new_var();
    zvar[i][i] = v;
    prog.z_entries.push_back({i, i, v});
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const int v = prog.new_var();
      zvar[i][j] = v;
      zvar[j][i] = v;
      prog.z_entries.push_back({i, j, v});
    }

  prog.objective.assign(prog.num_vars, 0.0);
  prog.objective[prog.alpha_var] = 1.0;

  // Diagonal pins.
  for (int i = 0; i < n; ++i) {
    AffineExpr e;
    e.add_term(zvar[i][i], 1.0);
    prog.lin_eq.push_back(std::move(e));
  }

  // Coupling equalities for pairs touching a moving agent; pins elsewhere.
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double z_old = cur_sqdist(i, j);
      if (!moving[i] && !moving[j]) {
        AffineExpr e;
        e.add_term(zvar[i][j], 1.0);
        e.constant = -z_old;
        prog.lin_eq.push_back(std::move(e));
        continue;
      }
      const Vec3 d = sorted[i].position - sorted[j].position;
      AffineExpr e;  // 2 (x_i' - x_j') . d - Z_ij' - z_old == 0
      e.constant = -z_old;
      if (moving[i]) {
        e.add_term(pos_var[i], 2.0 * d.x);
        e.add_term(pos_var[i] + 1, 2.0 * d.y);
        e.add_term(pos_var[i] + 2, 2.0 * d.z);
      } else {
        e.constant += 2.0 * sorted[i].position.dot(d);
      }
      if (moving[j]) {
        e.add_term(pos_var[j], -2.0 * d.x);
        e.add_term(pos_var[j] + 1, -2.0 * d.y);
        e.add_term(pos_var[j] + 2, -2.0 * d.z);
      } else {
        e.constant -= 2.0 * sorted[j].position.dot(d);
      }
      e.add_term(zvar[i][j], -1.0);
      prog.lin_eq.push_back(std::move(e));
    }
  }

  // Minimum separations, as squared-distance lower bounds.
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (!moving[i] && !moving[j]) continue;
      const bool same_layer = in_own_layer(i) && in_own_layer(j);
      const bool cross = (i < n1) != (j < n1);
      if (!same_layer && !cross) continue;
      const double rho = same_layer ? params.rho_intra : params.rho_cross;
      double bound = rho * rho;
      if (frozen.count(sorted[i].id) || frozen.count(sorted[j].id))
        bound = std::min(bound, cur_sqdist(i, j));
      AffineExpr e;
      e.add_term(zvar[i][j], 1.0);
      e.constant = -bound;
      prog.lin_ineq.push_back(std::move(e));
    }
  }

  // Motion caps and optional plane pins.
  for (int i = 0; i < n; ++i) {
    if (!moving[i]) continue;
    if (params.d_max > 0.0) {
      SocBlock soc;
      soc.label = "motion_cap";
      soc.head.constant = params.d_max;
      for (int c = 0; c < 3; ++c) {
        AffineExpr tail;
        tail.add_term(pos_var[i] + c, 1.0);
        const double cur = c == 0   ? sorted[i].position.x
                           : c == 1 ? sorted[i].position.y
                                    : sorted[i].position.z;
        tail.constant = -cur;
        soc.tail.push_back(std::move(tail));
      }
      prog.soc_blocks.push_back(std::move(soc));
    } else {
      for (int c = 0; c < 3; ++c) {
        AffineExpr e;
        e.add_term(pos_var[i] + c, 1.0);
        const double cur = c == 0   ? sorted[i].position.x
                           : c == 1 ? sorted[i].position.y
                                    : sorted[i].position.z;
        e.constant = -cur;
        prog.lin_eq.push_back(std::move(e));
      }
    }
    if (options.planar_layers && params.d_max > 0.0) {
      AffineExpr e;
      e.add_term(pos_var[i] + 2, 1.0);
      e.constant = -sorted[i].position.z;
      prog.lin_eq.push_back(std::move(e));
    }
  }

  // One epigraph block per removal scenario.
  const Matrix cmat = centering_matrix(n);
  std::vector<Link> candidates = space.candidate_links;
  std::sort(candidates.begin(), candidates.end());
  const int mc = static_cast<int>(candidates.size());
  const int psi = space.budget_psi;

  std::vector<int> pick(psi);
  for (int k = 0; k < psi; ++k) pick[k] = k;
  while (true) {
    LinkSet removed;
    std::string label = "removal_scenario";
    for (int k = 0; k < psi; ++k) {
      const Link& l = candidates[pick[k]];
      removed.insert(l);
      label += " (" + std::to_string(l.i) + "," + std::to_string(l.j) + ")";
    }

    LmiBlock blk;
    blk.dim = n;
    blk.label = label;
    blk.constant = Matrix(n, n);
    blk.var_index.push_back(prog.alpha_var);
    blk.coeff.push_back(cmat * -1.0);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (removed.count(Link(i + 1, j + 1))) continue;
        const double arg = pair_argument(sorted[i].position, sorted[j].position, weight_params);
        const double w_old = weight(arg, weight_params);
        const double z_old = cur_sqdist(i, j);
        const double grad = weight_gradient_sqdist(z_old, weight_params);
        if (w_old == 0.0 && grad == 0.0) continue;
        const Matrix em = edge_matrix(n, i, j);
        blk.constant.add_scaled(em, w_old - grad * z_old);
        if (grad != 0.0) {
          blk.var_index.push_back(zvar[i][j]);
          blk.coeff.push_back(em * grad);
        }
      }
    }
    prog.lmi_blocks.push_back(std::move(blk));

    if (psi == 0) break;
    int k = psi - 1;
    while (k >= 0 && pick[k] == mc - psi + k) --k;
    if (k < 0) break;
    ++pick[k];
    for (int s = k + 1; s < psi; ++s) pick[s] = pick[s - 1] + 1;
  }

  // Distance-matrix block: -C Z C >= 0.
  {
    LmiBlock blk;
    blk.dim = n;
    blk.label = "distance_matrix";
    blk.constant = Matrix(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        Matrix e(n, n);
        e(i, j) += 1.0;
        e(j, i) += 1.0;
        if (i == j) e(i, i) = 1.0;
        Matrix coeff = cmat * e * cmat;
        coeff = coeff * -1.0;
        coeff.symmetrize();
        blk.var_index.push_back(zvar[i][j]);
        blk.coeff.push_back(std::move(coeff));
      }
    }
    prog.lmi_blocks.push_back(std::move(blk));
  }

  // Affine dependencies among the pinned agents make the distance-matrix
  // block rank-deficient on the whole feasible set (any five or more pinned
  // agents in 3-D, any four in a plane). The corresponding null directions
  // C Z v = 0 are implied by feasibility; stating them as equalities lets the
  // solver project the block down to one with a strict interior.
  {
    std::vector<int> pinned;
    for (int i = 0; i < n; ++i)
      if (!moving[i]) pinned.push_back(i);
    if (pinned.size() >= 4) {
      Matrix h(4, static_cast<int>(pinned.size()));
      for (size_t c = 0; c < pinned.size(); ++c) {
        const Vec3& p = sorted[pinned[c]].position;
        h(0, c) = 1.0;
        h(1, c) = p.x;
        h(2, c) = p.y;
        h(3, c) = p.z;
      }
      const AffineSpan deps = affine_span(h, std::vector<double>(4, 0.0));
      for (int d = 0; d < deps.null_basis.cols(); ++d) {
        std::vector<double> v(n, 0.0);
        for (size_t c = 0; c < pinned.size(); ++c) v[pinned[c]] = deps.null_basis(c, d);
        // (Z v)_i - mean(Z v) = 0 per row; coefficients gathered per Z var.
        for (int i = 0; i < n; ++i) {
          std::vector<double> coef(prog.num_vars, 0.0);
          for (int j = 0; j < n; ++j) {
            if (v[j] != 0.0) coef[zvar[i][j]] += v[j];
            for (int a = 0; a < n; ++a)
              if (v[a] != 0.0) coef[zvar[j][a]] -= v[a] / n;
          }
          AffineExpr e;
          for (int q = 0; q < prog.num_vars; ++q)
            if (coef[q] != 0.0) e.add_term(q, coef[q]);
          if (!e.idx.empty()) prog.lin_eq.push_back(std::move(e));
        }
      }
    }
  }

  return prog;
}

double attacked_lambda2(const std::vector<AgentState>& agents, const WeightParams& weight_params,
                        const AttackSpec& spec) {
  const CommGraph g = build_graph(agents, weight_params);
  return worst_case_attack(g, derive_space(g, spec)).resulting_lambda2;
}

ConicSolution solve_player_step(const std::vector<AgentState>& agents, const PlayerParams& params,
                                const WeightParams& weight_params, const AttackActionSpace& space,
                                const std::set<int>& frozen, const AssembleOptions& options) {
  Vec3 centroid;
  for (const auto& a : agents) centroid += a.position;
  centroid = centroid * (1.0 / static_cast<double>(agents.size()));
  std::vector<AgentState> centered = agents;
  for (auto& a : centered) a.position = a.position - centroid;
  const ConicProgram prog =
      assemble_player_problem(centered, params, weight_params, space, frozen, options);
  ConicSolution sol = solve_conic(prog);
  for (auto& np : sol.new_positions) np.position += centroid;
  return sol;
}

RealizeResult verify_and_realize(const std::vector<AgentState>& agents_old,
                                 const ConicSolution& sol, const PlayerParams& params,
                                 const WeightParams& weight_params, const AttackSpec& objective_space,
                                 const std::set<int>& frozen) {
  std::vector<AgentState> sorted = agents_old;
  const auto partition = validate_agents(sorted);
  const int n = static_cast<int>(sorted.size());
  const int n1 = partition.first;
  const Layer own_layer = params.player == Player::P1 ? Layer::L1 : Layer::L2;

  std::vector<Vec3> disp(n);
  std::vector<bool> moved(n, false);
  for (const auto& np : sol.new_positions) {
    const int idx = np.agent_id - 1;
    if (idx < 0 || idx >= n) throw ValidationError("solution references unknown agent id");
    disp[idx] = np.position - sorted[idx].position;
    moved[idx] = true;
  }

  const double prev = attacked_lambda2(sorted, weight_params, objective_space);

  const double scales[] = {1.0, 0.5, 0.25, 0.125, 0.0};
  RealizeResult res;
  for (const double scale : scales) {
    std::vector<AgentState> cand = sorted;
    for (int i = 0; i < n; ++i)
      if (moved[i]) cand[i].position += disp[i] * scale;

    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      if (!moved[i]) continue;
      if (disp[i].norm() * scale > params.d_max + kRealizeTol) ok = false;
    }
    for (int i = 0; i < n && ok; ++i) {
      for (int j = i + 1; j < n && ok; ++j) {
        if (!moved[i] && !moved[j]) continue;
        const bool same_layer = sorted[i].layer == own_layer && sorted[j].layer == own_layer;
        const bool cross = (i < n1) != (j < n1);
        if (!same_layer && !cross) continue;
        double rho = same_layer ? params.rho_intra : params.rho_cross;
        if (frozen.count(sorted[i].id) || frozen.count(sorted[j].id))
          rho = std::min(rho, (sorted[i].position - sorted[j].position).norm());
        if ((cand[i].position - cand[j].position).norm() < rho - kRealizeTol) ok = false;
      }
    }
    if (!ok) continue;

    const double lam = attacked_lambda2(cand, weight_params, objective_space);
    if (lam >= prev - kRealizeTol) {
      res.accepted = true;
      res.scale = scale;
      res.agents = std::move(cand);
      res.realized_worst_lambda2 = lam;
      return res;
    }
  }

  // Unreachable: scale 0 reproduces the previous state exactly.
  res.accepted = true;
  res.scale = 0.0;
  res.agents = sorted;
  res.realized_worst_lambda2 = prev;
  return res;
}

}  // namespace masgame
