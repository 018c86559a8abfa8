#include "dynamics.hpp"

#include <algorithm>

namespace masgame {

DistanceState DistanceState::from_positions(const std::vector<AgentState>& agents) {
  std::vector<AgentState> sorted = agents;
  validate_agents(sorted);
  const int n = static_cast<int>(sorted.size());
  DistanceState st;
  st.Z = Matrix(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double sq = (sorted[i].position - sorted[j].position).squared_norm();
      st.Z(i, j) = sq;
      st.Z(j, i) = sq;
    }
  return st;
}

double coupling_residual(const Vec3& x_new_i, const Vec3& x_new_j, const Vec3& x_old_i,
                         const Vec3& x_old_j, double z_new_ij, double z_old_ij) {
  return 2.0 * (x_new_i - x_new_j).dot(x_old_i - x_old_j) - (z_new_ij + z_old_ij);
}

double predicted_weight_affine(double w_old, double grad, double z_new_ij, double z_old_ij) {
  return w_old + grad * (z_new_ij - z_old_ij);
}

double predicted_weight(double w_old, double grad, double z_new_ij, double z_old_ij) {
  return std::clamp(predicted_weight_affine(w_old, grad, z_new_ij, z_old_ij), 0.0, 1.0);
}

Matrix predicted_laplacian(const std::vector<AgentState>& agents_old, const Matrix& z_new,
                           const WeightParams& params, const LinkSet& removed_links) {
  std::vector<AgentState> sorted = agents_old;
  validate_agents(sorted);
  const int n = static_cast<int>(sorted.size());
  Matrix lap(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (removed_links.count(Link(i + 1, j + 1))) continue;
      const double arg = pair_argument(sorted[i].position, sorted[j].position, params);
      const double w_old = weight(arg, params);
      const double z_old = (sorted[i].position - sorted[j].position).squared_norm();
      const double grad = weight_gradient_sqdist(z_old, params);
      const double w = predicted_weight_affine(w_old, grad, z_new(i, j), z_old);
      if (w_old == 0.0 && grad == 0.0) continue;  // beyond cutoff: stays absent
      lap(i, j) -= w;
      lap(j, i) -= w;
      lap(i, i) += w;
      lap(j, j) += w;
    }
  }
  return lap;
}

}  // namespace masgame
