#pragma once

#include <vector>

#include "graph_core.hpp"

namespace masgame {

// Symmetric matrix of squared inter-agent distances, zero diagonal.
struct DistanceState {
  Matrix Z;

  static DistanceState from_positions(const std::vector<AgentState>& agents);
};

// Residual of the first-order coupling between new positions and new squared
// distances: 2 (x_i' - x_j')^T (x_i - x_j) - (Z_ij' + Z_ij). Zero when the
// linearized update relation holds.
double coupling_residual(const Vec3& x_new_i, const Vec3& x_new_j, const Vec3& x_old_i,
                         const Vec3& x_old_j, double z_new_ij, double z_old_ij);

// First-order weight update w + grad * (Z' - Z), clamped to [0,1] for use on
// realized graphs.
double predicted_weight(double w_old, double grad, double z_new_ij, double z_old_ij);

// Same, without the clamp; this is the affine form used inside optimization
// models.
double predicted_weight_affine(double w_old, double grad, double z_new_ij, double z_old_ij);

// Laplacian assembled from the affine predicted weights (no clamping), so the
// result is affine in the entries of z_new. removed_links contribute zero.
Matrix predicted_laplacian(const std::vector<AgentState>& agents_old, const Matrix& z_new,
                           const WeightParams& params, const LinkSet& removed_links = {});

}  // namespace masgame
