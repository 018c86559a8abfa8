#pragma once

#include <set>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"

namespace masgame {

enum class Layer { L1, L2 };
enum class ArgConvention { SquaredDistance, Distance };

// lambda2 below this is reported as zero / disconnected.
inline constexpr double kDisconnectedTol = 1e-8;

// Piecewise link-strength profile: 1 on [0, r_sat], exponential decay
// delta^((r_sat - arg)/(r_sat - r_cut)) on (r_sat, r_cut), 0 from r_cut on.
// The argument is either the squared distance or the distance between two
// agents, per arg_convention.
struct WeightParams {
  double delta = 0.1;
  double r_sat = 2.0;
  double r_cut = 6.0;
  ArgConvention arg_convention = ArgConvention::SquaredDistance;

  void validate() const;  // throws ValidationError
};

struct AgentState {
  int id = 0;  // 1-based; layer L1 agents come first
  Layer layer = Layer::L1;
  Vec3 position;
};

// Unordered agent-id pair, stored normalized (i < j).
struct Link {
  int i = 0, j = 0;
  Link() = default;
  Link(int a, int b) : i(std::min(a, b)), j(std::max(a, b)) {}
  bool operator<(const Link& o) const { return i != o.i ? i < o.i : j < o.j; }
  bool operator==(const Link& o) const { return i == o.i && j == o.j; }
};

using LinkSet = std::set<Link>;

struct CommGraph {
  int n = 0;
  std::pair<int, int> layer_partition{0, 0};  // (n1, n2)
  Matrix weights;                             // symmetric, zero diagonal
  Matrix laplacian;                           // row sums 0, PSD
};

struct SpectralResult {
  double lambda2 = 0.0;              // 0 when below kDisconnectedTol
  std::vector<double> fiedler;       // unit, orthogonal to all-ones
  std::vector<double> full_spectrum; // ascending, raw
  bool disconnected = false;
};

double weight(double arg, const WeightParams& params);

// d(weight)/d(arg); 0 on both plateaus and exactly at the kinks.
double weight_gradient(double arg, const WeightParams& params);

// d(weight)/d(squared distance) for either argument convention; this is the
// sensitivity used by the linearized motion model.
double weight_gradient_sqdist(double sqdist, const WeightParams& params);

// ||a-b||^2 or ||a-b|| per the convention.
double pair_argument(const Vec3& a, const Vec3& b, const WeightParams& params);

// Validates ids (1..n, L1 prefix), computes pairwise weights and the
// Laplacian. removed_links are treated as absent regardless of distance.
CommGraph build_graph(const std::vector<AgentState>& agents, const WeightParams& params,
                      const LinkSet& removed_links = {});

SpectralResult algebraic_connectivity(const CommGraph& g);

// Graph with link (i,j) removed via the rank-one Laplacian correction
// L - w_ij (e_i - e_j)(e_i - e_j)^T. Agent ids are 1-based.
CommGraph remove_link_laplacian(const CommGraph& g, int i, int j);

// Links with positive weight, ascending (i, j).
std::vector<Link> positive_links(const CommGraph& g);

// Sorts by id and checks the labeling invariants; returns (n1, n2).
std::pair<int, int> validate_agents(std::vector<AgentState>& agents);

}  // namespace masgame
