#pragma once

#include <string>
#include <vector>

#include "linalg.hpp"

namespace masgame {

// Sparse affine expression over the program variables: sum(coef*w[idx]) + constant.
struct AffineExpr {
  std::vector<int> idx;
  std::vector<double> coef;
  double constant = 0.0;

  void add_term(int var, double c) {
    idx.push_back(var);
    coef.push_back(c);
  }
  double value(const std::vector<double>& w) const {
    double s = constant;
    for (size_t k = 0; k < idx.size(); ++k) s += coef[k] * w[idx[k]];
    return s;
  }
};

// constant + sum(w[var_index[q]] * coeff[q]) >= 0 (PSD).
struct LmiBlock {
  int dim = 0;
  Matrix constant;
  std::vector<int> var_index;
  std::vector<Matrix> coeff;
  std::string label;
};

// ||tail(w)||_2 <= head(w).
struct SocBlock {
  AffineExpr head;
  std::vector<AffineExpr> tail;
  std::string label;
};

struct ConicProgram {
  int num_vars = 0;
  std::vector<double> objective;  // maximize objective . w

  int alpha_var = -1;
  struct PositionVar {
    int agent_id = 0;
    int var_start = 0;  // x at var_start, y at +1, z at +2
  };
  std::vector<PositionVar> positions;
  struct ZVar {
    int i = 0, j = 0;  // 0-based agent indices, i <= j
    int var = -1;
  };
  std::vector<ZVar> z_entries;
  int n_agents = 0;

  std::vector<LmiBlock> lmi_blocks;
  std::vector<AffineExpr> lin_eq;    // expr == 0
  std::vector<AffineExpr> lin_ineq;  // expr >= 0
  std::vector<SocBlock> soc_blocks;

  int new_var() { return num_vars++; }
};

enum class SolveStatus { Optimal, Infeasible, MaxIterations, NumericalBreakdown };

const char* to_string(SolveStatus s);

struct KktResiduals {
  double primal = 0.0;  // cone-constraint residual of the returned point
  double dual = 0.0;
  double gap = 0.0;
};

struct ConicSolution {
  SolveStatus status = SolveStatus::MaxIterations;
  double alpha = 0.0;
  struct AgentPosition {
    int agent_id = 0;
    Vec3 position;
  };
  std::vector<AgentPosition> new_positions;
  Matrix z_opt;
  KktResiduals kkt;
  int iterations = 0;
  std::string message;
  std::vector<double> w;  // full variable vector
};

struct SolverOptions {
  double tol_feas = 1e-7;
  double tol_gap = 1e-6;
  int max_iters = 200;
};

// Small dense primal-dual interior-point solver. Equalities are eliminated
// onto the affine feasible subspace; inequalities and second-order cones are
// folded into 1x1 and arrow-head semidefinite blocks; structural common
// kernels (e.g. the all-ones direction of Laplacian pencils) are projected
// out; the remaining block-diagonal SDP is solved with Nesterov-Todd scaled
// predictor-corrector steps.
ConicSolution solve_conic(const ConicProgram& prog, const SolverOptions& options = {});

}  // namespace masgame
