#include <doctest.h>

#include <cmath>

#include "dynamics.hpp"
#include "oracles.hpp"

using namespace masgame;

TEST_SUITE_BEGIN("dynamics");

namespace {

const WeightParams kFig1{0.1, 2.0, 6.0, ArgConvention::SquaredDistance};

}  // namespace

TEST_CASE("coupling_residual is zero for a stationary pair") {
  const Vec3 xi(0.3, -1.0, 2.0), xj(1.1, 0.4, 2.0);
  const double z = (xi - xj).squared_norm();
  CHECK(coupling_residual(xi, xj, xi, xj, z, z) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("coupling_residual reproduces the 1-D example: Z_new must be 1.4") {
  const Vec3 xi_old(0, 0, 0), xj_old(1, 0, 0);
  const Vec3 xi_new(0, 0, 0), xj_new(1.2, 0, 0);
  // 2*(-1.2)*(-1) - (Z_new + 1) = 0  =>  Z_new = 1.4, true squared distance 1.44
  CHECK(coupling_residual(xi_new, xj_new, xi_old, xj_old, 1.4, 1.0) ==
        doctest::Approx(0.0).epsilon(1e-14));
  CHECK(coupling_residual(xi_new, xj_new, xi_old, xj_old, 1.44, 1.0) ==
        doctest::Approx(-0.04).epsilon(1e-12));
}

TEST_CASE("coupling_residual is symmetric in the pair") {
  oracle::Rng rng(71);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec3 xo_i(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    const Vec3 xo_j(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    const Vec3 xn_i(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    const Vec3 xn_j(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    const double zn = rng.uniform(0, 4), zo = rng.uniform(0, 4);
    CHECK(coupling_residual(xn_i, xn_j, xo_i, xo_j, zn, zo) ==
          doctest::Approx(coupling_residual(xn_j, xn_i, xo_j, xo_i, zn, zo)).epsilon(1e-13));
  }
}

TEST_CASE("predicted_weight: zero displacement returns w_old") {
  CHECK(predicted_weight(0.42, -0.1, 3.0, 3.0) == doctest::Approx(0.42));
}

TEST_CASE("predicted_weight: arithmetic from the arg=4 example") {
  const double w_old = std::pow(0.1, 0.5);
  const double grad = weight_gradient(4.0, kFig1);
  const double v = predicted_weight(w_old, grad, 5.0, 4.0);
  CHECK(v == doctest::Approx(w_old + grad).epsilon(1e-12));
  CHECK(v == doctest::Approx(0.13419).epsilon(1e-3));
}

TEST_CASE("predicted_weight clamps at zero") {
  CHECK(predicted_weight(0.05, -0.18204, 1.0, 0.0) == 0.0);
  CHECK(predicted_weight(0.9, 0.2, 2.0, 1.0) == 1.0);  // ceiling clamp
  CHECK(predicted_weight_affine(0.05, -0.18204, 1.0, 0.0) ==
        doctest::Approx(0.05 - 0.18204).epsilon(1e-12));
}

TEST_CASE("predicted_laplacian at the fixed point equals the built Laplacian") {
  oracle::Rng rng(73);
  const auto agents = oracle::random_agents(rng, 2, 4, 2.5, 0.4, 1.0);
  const CommGraph g = build_graph(agents, kFig1);
  const DistanceState st = DistanceState::from_positions(agents);
  const Matrix pred = predicted_laplacian(agents, st.Z, kFig1);
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      CHECK(std::fabs(pred(i, j) - g.laplacian(i, j)) <= 1e-12);
}

TEST_CASE("predicted_laplacian entry (1,1) of a two-agent system is the predicted weight") {
  std::vector<AgentState> agents = {{1, Layer::L1, {0, 0, 0}}, {2, Layer::L1, {1.8, 0, 0}}};
  const double z_old = 1.8 * 1.8;
  const double w_old = weight(z_old, kFig1);
  const double grad = weight_gradient(z_old, kFig1);
  Matrix z_new(2, 2);
  z_new(0, 1) = z_new(1, 0) = 4.5;
  const Matrix pred = predicted_laplacian(agents, z_new, kFig1);
  CHECK(pred(0, 0) == doctest::Approx(w_old + grad * (4.5 - z_old)).epsilon(1e-12));
  CHECK(pred(0, 1) == doctest::Approx(-(w_old + grad * (4.5 - z_old))).epsilon(1e-12));
}

TEST_CASE("predicted_laplacian is affine in Z") {
  oracle::Rng rng(79);
  const auto agents = oracle::random_agents(rng, 1, 4, 2.5, 0.4, 1.0);
  const int n = static_cast<int>(agents.size());
  Matrix za(n, n), zb(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      za(i, j) = za(j, i) = rng.uniform(0.5, 6.0);
      zb(i, j) = zb(j, i) = rng.uniform(0.5, 6.0);
    }
  const double alpha = 0.37;
  Matrix zc(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) zc(i, j) = alpha * za(i, j) + (1 - alpha) * zb(i, j);
  const Matrix la = predicted_laplacian(agents, za, kFig1);
  const Matrix lb = predicted_laplacian(agents, zb, kFig1);
  const Matrix lc = predicted_laplacian(agents, zc, kFig1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      CHECK(std::fabs(lc(i, j) - (alpha * la(i, j) + (1 - alpha) * lb(i, j))) <= 1e-12);
}

TEST_CASE("predicted lambda2 differs from realized by O(move^2) on the 3-agent path") {
  // Agents in the decay band so the gradient is informative.
  std::vector<AgentState> agents = {
      {1, Layer::L1, {0, 0, 0}}, {2, Layer::L1, {1.6, 0, 0}}, {3, Layer::L1, {3.2, 0, 0}}};
  oracle::Rng rng(83);
  const double h = 1e-3;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<AgentState> moved = agents;
    for (auto& a : moved)
      a.position += Vec3(rng.uniform(-h, h), rng.uniform(-h, h), rng.uniform(-h, h));
    const DistanceState z_new = DistanceState::from_positions(moved);
    const Matrix pred = predicted_laplacian(agents, z_new.Z, kFig1);
    const CommGraph realized = build_graph(moved, kFig1);
    const double lam_pred = oracle::lambda_k(pred, 1);
    const double lam_real = oracle::lambda_k(realized.laplacian, 1);
    CHECK(std::fabs(lam_pred - lam_real) < 1e-5);
  }
}

TEST_CASE("first-order accuracy: log-log slope of the weight prediction error is ~2") {
  oracle::Rng rng(89);
  const double hs[3] = {1e-1, 1e-2, 1e-3};
  double errs[3] = {0, 0, 0};
  const int samples = 200;
  for (int hi = 0; hi < 3; ++hi) {
    double total = 0.0;
    for (int s = 0; s < samples; ++s) {
      // Pair in the middle band under the squared-distance convention.
      const double d = rng.uniform(1.6, 2.3);  // squared distance in (2.56, 5.29)
      const Vec3 a(0, 0, 0), b(d, 0, 0);
      Vec3 db(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      db = db * (hs[hi] / db.norm());
      const Vec3 b_new = b + db;
      const double z_old = (a - b).squared_norm();
      const double z_new = (a - b_new).squared_norm();
      const double grad = weight_gradient_sqdist(z_old, kFig1);
      const double predicted = predicted_weight_affine(weight(z_old, kFig1), grad, z_new, z_old);
      const double realized = weight(z_new, kFig1);
      total += std::fabs(predicted - realized);
    }
    errs[hi] = total / samples;
  }
  const double slope = (std::log(errs[0]) - std::log(errs[2])) / (std::log(hs[0]) - std::log(hs[2]));
  CHECK(slope >= 1.9);
}

TEST_SUITE_END();
