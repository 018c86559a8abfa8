#include "graph_core.hpp"

#include <algorithm>
#include <cmath>

namespace masgame {

void WeightParams::validate() const {
  if (!(delta > 0.0 && delta < 1.0))
    throw ValidationError("weights.delta must be in (0,1)");
  if (!(r_sat > 0.0)) throw ValidationError("weights.r_sat must be positive");
  if (!(r_cut > r_sat)) throw ValidationError("weights.r_cut must exceed r_sat");
}

double weight(double arg, const WeightParams& params) {
  if (arg <= params.r_sat) return 1.0;
  if (arg >= params.r_cut) return 0.0;
  const double expnt = (params.r_sat - arg) / (params.r_sat - params.r_cut);
  return std::pow(params.delta, expnt);
}

double weight_gradient(double arg, const WeightParams& params) {
  if (arg <= params.r_sat || arg >= params.r_cut) return 0.0;
  return weight(arg, params) * std::log(params.delta) / (params.r_cut - params.r_sat);
}

double weight_gradient_sqdist(double sqdist, const WeightParams& params) {
  if (params.arg_convention == ArgConvention::SquaredDistance)
    return weight_gradient(sqdist, params);
  const double dist = std::sqrt(sqdist);
  if (dist <= 0.0) return 0.0;
  return weight_gradient(dist, params) / (2.0 * dist);
}

double pair_argument(const Vec3& a, const Vec3& b, const WeightParams& params) {
  const double sq = (a - b).squared_norm();
  return params.arg_convention == ArgConvention::SquaredDistance ? sq : std::sqrt(sq);
}

std::pair<int, int> validate_agents(std::vector<AgentState>& agents) {
  std::sort(agents.begin(), agents.end(),
            [](const AgentState& a, const AgentState& b) { return a.id < b.id; });
  const int n = static_cast<int>(agents.size());
  for (int k = 0; k + 1 < n; ++k) {
    if (agents[k].id == agents[k + 1].id)
      throw DuplicateAgentId("duplicate agent id " + std::to_string(agents[k].id));
  }
  for (int k = 0; k < n; ++k) {
    if (agents[k].id != k + 1)
      throw ValidationError("agent ids must be exactly 1.." + std::to_string(n));
  }
  int n1 = 0;
  while (n1 < n && agents[n1].layer == Layer::L1) ++n1;
  for (int k = n1; k < n; ++k) {
    if (agents[k].layer != Layer::L2)
      throw ValidationError("layer L1 agents must have the lowest ids (agent " +
                            std::to_string(agents[k].id) + " out of order)");
  }
  return {n1, n - n1};
}

CommGraph build_graph(const std::vector<AgentState>& agents, const WeightParams& params,
                      const LinkSet& removed_links) {
  params.validate();
  std::vector<AgentState> sorted = agents;
  CommGraph g;
  g.layer_partition = validate_agents(sorted);
  g.n = static_cast<int>(sorted.size());
  g.weights = Matrix(g.n, g.n);
  g.laplacian = Matrix(g.n, g.n);
  for (int i = 0; i < g.n; ++i) {
    for (int j = i + 1; j < g.n; ++j) {
      if (removed_links.count(Link(i + 1, j + 1))) continue;
      const double w = weight(pair_argument(sorted[i].position, sorted[j].position, params), params);
      if (w <= 0.0) continue;
      g.weights(i, j) = w;
      g.weights(j, i) = w;
      g.laplacian(i, j) -= w;
      g.laplacian(j, i) -= w;
      g.laplacian(i, i) += w;
      g.laplacian(j, j) += w;
    }
  }
  return g;
}

SpectralResult algebraic_connectivity(const CommGraph& g) {
  SpectralResult out;
  const SymEig eig = eigh(g.laplacian);
  out.full_spectrum = eig.values;
  const int n = g.n;
  if (n < 2) {
    out.lambda2 = 0.0;
    out.disconnected = true;
    out.fiedler.assign(n, 0.0);
    return out;
  }
  double lam2 = eig.values[1];
  out.fiedler.resize(n);
  for (int k = 0; k < n; ++k) out.fiedler[k] = eig.vectors(k, 1);

  // Deflate any all-ones component; for a connected graph the second
  // eigenvector is already orthogonal to 1, but for lambda2 ~ 0 the
  // eigensolver may mix the two near-null directions.
  double mean = 0.0;
  for (double v : out.fiedler) mean += v;
  mean /= n;
  double nrm = 0.0;
  for (double& v : out.fiedler) {
    v -= mean;
    nrm += v * v;
  }
  nrm = std::sqrt(nrm);
  if (nrm > 1e-12) {
    for (double& v : out.fiedler) v /= nrm;
  } else {
    // Degenerate direction; fall back to a deterministic vector in 1-perp.
    const double a = 1.0 / std::sqrt(2.0);
    std::fill(out.fiedler.begin(), out.fiedler.end(), 0.0);
    out.fiedler[0] = a;
    out.fiedler[1] = -a;
  }
  int imax = 0;
  double vmax = 0.0;
  for (int k = 0; k < n; ++k) {
    if (std::fabs(out.fiedler[k]) > vmax) {
      vmax = std::fabs(out.fiedler[k]);
      imax = k;
    }
  }
  if (out.fiedler[imax] < 0.0)
    for (double& v : out.fiedler) v = -v;

  if (lam2 < kDisconnectedTol) {
    out.lambda2 = 0.0;
    out.disconnected = true;
  } else {
    out.lambda2 = lam2;
    out.disconnected = false;
  }
  return out;
}

CommGraph remove_link_laplacian(const CommGraph& g, int i, int j) {
  if (i < 1 || j < 1 || i > g.n || j > g.n || i == j)
    throw LinkNotPresent("link (" + std::to_string(i) + "," + std::to_string(j) + ") out of range");
  const int a = i - 1, b = j - 1;
  const double w = g.weights(a, b);
  if (!(w > 0.0))
    throw LinkNotPresent("link (" + std::to_string(i) + "," + std::to_string(j) + ") not present");
  CommGraph out = g;
  out.weights(a, b) = 0.0;
  out.weights(b, a) = 0.0;
  out.laplacian(a, a) -= w;
  out.laplacian(b, b) -= w;
  out.laplacian(a, b) += w;
  out.laplacian(b, a) += w;
  return out;
}

std::vector<Link> positive_links(const CommGraph& g) {
  std::vector<Link> links;
  for (int i = 0; i < g.n; ++i)
    for (int j = i + 1; j < g.n; ++j)
      if (g.weights(i, j) > 0.0) links.emplace_back(i + 1, j + 1);
  return links;
}

}  // namespace masgame
