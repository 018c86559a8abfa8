#include "conic.hpp"

#include <algorithm>
#include <cassert>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <limits>

namespace masgame {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal:
      return "optimal";
    case SolveStatus::Infeasible:
      return "infeasible";
    case SolveStatus::MaxIterations:
      return "max_iterations";
    case SolveStatus::NumericalBreakdown:
      return "numerical_breakdown";
  }
  return "unknown";
}

namespace {

// One semidefinite block in the reduced variables t: f0 + sum t_k fk >= 0.
struct ReducedBlock {
  Matrix f0;
  std::vector<Matrix> fk;
  std::string label;
  int dim() const { return f0.rows(); }
};

// Largest step length a with P + a*D >= 0, via the smallest eigenvalue of
// L^{-1} D L^{-T} where P = L L^T.
double max_psd_step(const Matrix& p, const Matrix& d) {
  Matrix l;
  if (!cholesky(p, l)) return 0.0;
  const int n = p.rows();
  // Y = L^{-1} D
  Matrix y(n, n);
  for (int col = 0; col < n; ++col) {
    for (int i = 0; i < n; ++i) {
      double s = d(i, col);
      for (int k = 0; k < i; ++k) s -= l(i, k) * y(k, col);
      y(i, col) = s / l(i, i);
    }
  }
  // N = Y L^{-T}: solve N L^T = Y row by row.
  Matrix nmat(n, n);
  for (int row = 0; row < n; ++row) {
    for (int j = 0; j < n; ++j) {
      double s = y(row, j);
      for (int k = 0; k < j; ++k) s -= nmat(row, k) * l(j, k);
      nmat(row, j) = s / l(j, j);
    }
  }
  nmat.symmetrize();
  const SymEig e = eigh(nmat);
  const double lam_min = e.values.front();
  if (lam_min >= -1e-13) return std::numeric_limits<double>::infinity();
  return -1.0 / lam_min;
}

struct IpmOutcome {
  SolveStatus status = SolveStatus::MaxIterations;
  std::vector<double> t;
  KktResiduals kkt;
  int iterations = 0;
  std::string message;
};

IpmOutcome ipm_solve(const std::vector<ReducedBlock>& blocks, const std::vector<double>& b,
                     const SolverOptions& opt) {
  const int m = static_cast<int>(b.size());
  const int nblocks = static_cast<int>(blocks.size());
  IpmOutcome out;
  out.t.assign(m, 0.0);

  int total_dim = 0;
  double c0_norm_sq = 0.0, a_norm = 0.0;
  for (const auto& blk : blocks) {
    total_dim += blk.dim();
    c0_norm_sq += blk.f0.inner(blk.f0);
    for (const auto& f : blk.fk) a_norm = std::max(a_norm, f.frobenius_norm());
  }
  const double c0_norm = std::sqrt(c0_norm_sq);
  const double b_norm = norm2(b);
  const double rho = std::max({10.0, c0_norm, a_norm, inf_norm(b)});

  std::vector<Matrix> x(nblocks), s(nblocks);
  for (int bi = 0; bi < nblocks; ++bi) {
    x[bi] = Matrix::identity(blocks[bi].dim()) * rho;
    s[bi] = Matrix::identity(blocks[bi].dim()) * rho;
  }
  std::vector<double> t(m, 0.0);

  double best_score = std::numeric_limits<double>::infinity();
  std::vector<double> best_t = t;
  KktResiduals best_kkt;
  int stall = 0;
  double prev_dinfeas = std::numeric_limits<double>::infinity();
  int tiny_steps = 0;
  int no_progress = 0;

  auto finish = [&](SolveStatus st, const std::string& msg, int iters) {
    out.status = st;
    out.t = best_t;
    out.kkt = best_kkt;
    out.iterations = iters;
    out.message = msg;
    return out;
  };

  for (int iter = 1; iter <= opt.max_iters; ++iter) {
    // Residuals. Rd = f0 + sum t fk - S per block, Rp_k = b_k + <fk, X>.
    std::vector<Matrix> rd(nblocks);
    double rd_norm_sq = 0.0;
    for (int bi = 0; bi < nblocks; ++bi) {
      const auto& blk = blocks[bi];
      Matrix r = blk.f0 - s[bi];
      for (int k = 0; k < m; ++k) r.add_scaled(blk.fk[k], t[k]);
      rd_norm_sq += r.inner(r);
      rd[bi] = std::move(r);
    }
    std::vector<double> rp(m);
    for (int k = 0; k < m; ++k) {
      double v = b[k];
      for (int bi = 0; bi < nblocks; ++bi) v += blocks[bi].fk[k].inner(x[bi]);
      rp[k] = v;
    }

    double xs = 0.0, pobj = 0.0, x_norm_sq = 0.0;
    for (int bi = 0; bi < nblocks; ++bi) {
      xs += x[bi].inner(s[bi]);
      pobj += blocks[bi].f0.inner(x[bi]);
      x_norm_sq += x[bi].inner(x[bi]);
    }
    const double mu = xs / total_dim;
    const double dobj = dot(b, t);
    const double pinfeas = norm2(rp) / (1.0 + b_norm);
    const double dinfeas = std::sqrt(rd_norm_sq) / (1.0 + c0_norm);
    const double relgap = std::fabs(pobj - dobj) / (1.0 + std::max(std::fabs(pobj), std::fabs(dobj)));

    if (std::getenv("MASGAME_IPM_DEBUG"))
      std::fprintf(stderr, "it %3d mu=%9.2e pinf=%9.2e dinf=%9.2e gap=%9.2e pobj=%12.4e dobj=%12.4e\n",
                   iter, mu, pinfeas, dinfeas, relgap, pobj, dobj);

    const double score = std::max({pinfeas, dinfeas, relgap});
    if (score < best_score) {
      best_score = score;
      best_t = t;
      best_kkt = {dinfeas, pinfeas, relgap};
      no_progress = 0;
    } else if (++no_progress >= 40) {
      return finish(SolveStatus::MaxIterations, "progress stalled", iter);
    }

    if (pinfeas <= opt.tol_feas && dinfeas <= opt.tol_feas && relgap <= opt.tol_gap) {
      best_t = t;
      best_kkt = {dinfeas, pinfeas, relgap};
      return finish(SolveStatus::Optimal, "", iter);
    }

    // Infeasibility heuristics: the cone-constraint residual refuses to
    // shrink, or the primal diverges along an improving ray.
    if (dinfeas > opt.tol_feas && dinfeas > 0.999 * prev_dinfeas)
      ++stall;
    else
      stall = 0;
    prev_dinfeas = std::min(prev_dinfeas, dinfeas);
    if (stall >= 20) return finish(SolveStatus::Infeasible, "constraint residual stalled", iter);
    if (pobj < -1e12 || std::sqrt(x_norm_sq) > 1e13)
      return finish(SolveStatus::Infeasible, "primal improving ray detected", iter);
    if (mu < 1e-14)
      return finish(SolveStatus::MaxIterations, "complementarity floor reached", iter);

    // Nesterov-Todd scaling point per block: W S W = X. Eigenvalues are
    // floored a hair above zero so late-stage rounding drift cannot abort
    // the iteration.
    std::vector<Matrix> w(nblocks), sinv(nblocks);
    bool scaling_ok = true;
    for (int bi = 0; bi < nblocks && scaling_ok; ++bi) {
      const SymEig es = eigh(s[bi]);
      const double s_floor = 1e-14 * (1.0 + std::fabs(es.values.back()));
      if (es.values.back() <= 0.0) {
        scaling_ok = false;
        break;
      }
      const int n = blocks[bi].dim();
      Matrix sh(n, n), sih(n, n), si(n, n);
      for (int c = 0; c < n; ++c) {
        const double lam = std::max(es.values[c], s_floor);
        const double rt = std::sqrt(lam);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            const double vv = es.vectors(i, c) * es.vectors(j, c);
            sh(i, j) += rt * vv;
            sih(i, j) += vv / rt;
            si(i, j) += vv / lam;
          }
      }
      Matrix tm = sh * x[bi] * sh;
      tm.symmetrize();
      const SymEig et = eigh(tm);
      const double t_floor = 1e-14 * (1.0 + std::fabs(et.values.back()));
      if (et.values.back() <= 0.0) {
        scaling_ok = false;
        break;
      }
      Matrix th(n, n);
      for (int c = 0; c < n; ++c) {
        const double rt = std::sqrt(std::max(et.values[c], t_floor));
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) th(i, j) += rt * et.vectors(i, c) * et.vectors(j, c);
      }
      Matrix wb = sih * th * sih;
      wb.symmetrize();
      w[bi] = std::move(wb);
      sinv[bi] = std::move(si);
    }
    if (!scaling_ok)
      return finish(SolveStatus::NumericalBreakdown, "scaling factorization failed", iter);

    // Schur complement M_kl = sum_b <fk, W fl W>.
    Matrix schur(m, m);
    for (int bi = 0; bi < nblocks; ++bi) {
      const auto& blk = blocks[bi];
      for (int l = 0; l < m; ++l) {
        Matrix g = w[bi] * blk.fk[l] * w[bi];
        for (int k = 0; k <= l; ++k) {
          const double v = blk.fk[k].inner(g);
          schur(k, l) += v;
          if (k != l) schur(l, k) += v;
        }
      }
    }
    Matrix schur_chol;
    {
      bool ok = cholesky(schur, schur_chol);
      const double base = 1.0 + schur.trace() / std::max(1, m);
      for (double rel = 1e-14; !ok && rel <= 1e-2; rel *= 100.0) {
        Matrix reg = schur;
        for (int k = 0; k < m; ++k) reg(k, k) += rel * base;
        ok = cholesky(reg, schur_chol);
      }
      if (!ok)
        return finish(SolveStatus::NumericalBreakdown, "Schur factorization failed", iter);
    }

    std::vector<double> asinv(m, 0.0), ax(m, 0.0), awrdw(m, 0.0);
    std::vector<Matrix> hb(nblocks);
    for (int bi = 0; bi < nblocks; ++bi) {
      hb[bi] = w[bi] * rd[bi] * w[bi];
      hb[bi].symmetrize();
    }
    for (int k = 0; k < m; ++k) {
      for (int bi = 0; bi < nblocks; ++bi) {
        asinv[k] += blocks[bi].fk[k].inner(sinv[bi]);
        ax[k] += blocks[bi].fk[k].inner(x[bi]);
        awrdw[k] += blocks[bi].fk[k].inner(hb[bi]);
      }
    }

    auto solve_direction = [&](double sigma, const std::vector<Matrix>& corr,
                               std::vector<double>& dt, std::vector<Matrix>& ds,
                               std::vector<Matrix>& dx) {
      std::vector<double> rhs(m);
      for (int k = 0; k < m; ++k) {
        rhs[k] = rp[k] + sigma * mu * asinv[k] - ax[k] - awrdw[k];
        if (!corr.empty())
          for (int bi = 0; bi < nblocks; ++bi) rhs[k] += blocks[bi].fk[k].inner(corr[bi]);
      }
      dt = cholesky_solve(schur_chol, rhs);
      ds.assign(nblocks, Matrix());
      dx.assign(nblocks, Matrix());
      for (int bi = 0; bi < nblocks; ++bi) {
        Matrix dsb = rd[bi];
        for (int k = 0; k < m; ++k) dsb.add_scaled(blocks[bi].fk[k], dt[k]);
        Matrix dxb = sinv[bi] * (sigma * mu) - x[bi] - w[bi] * dsb * w[bi];
        if (!corr.empty()) dxb += corr[bi];
        dxb.symmetrize();
        ds[bi] = std::move(dsb);
        dx[bi] = std::move(dxb);
      }
    };

    auto max_steps_of = [&](const std::vector<Matrix>& dx, const std::vector<Matrix>& ds) {
      std::pair<double, double> a{1.0, 1.0};
      for (int bi = 0; bi < nblocks; ++bi) {
        a.first = std::min(a.first, 0.99 * max_psd_step(x[bi], dx[bi]));
        a.second = std::min(a.second, 0.99 * max_psd_step(s[bi], ds[bi]));
      }
      return a;
    };

    std::vector<double> dt_aff;
    std::vector<Matrix> ds_aff, dx_aff;
    solve_direction(0.0, {}, dt_aff, ds_aff, dx_aff);

    const auto [ap_aff, ad_aff] = max_steps_of(dx_aff, ds_aff);
    double mu_aff = 0.0;
    for (int bi = 0; bi < nblocks; ++bi) {
      Matrix xa = x[bi];
      xa.add_scaled(dx_aff[bi], ap_aff);
      Matrix sa = s[bi];
      sa.add_scaled(ds_aff[bi], ad_aff);
      mu_aff += xa.inner(sa);
    }
    mu_aff = std::max(mu_aff / total_dim, 0.0);
    double sigma = std::pow(mu_aff / mu, 3.0);
    sigma = std::clamp(sigma, 1e-6, 0.9999);

    // Second-order correction sigma * W dS W dS S^{-1}, kept only when it
    // does not shorten the achievable step.
    std::vector<Matrix> corr(nblocks);
    for (int bi = 0; bi < nblocks; ++bi) {
      Matrix t = w[bi] * ds_aff[bi] * w[bi] * ds_aff[bi] * sinv[bi];
      t.symmetrize();
      corr[bi] = t * sigma;
    }
    std::vector<double> dt;
    std::vector<Matrix> ds, dx;
    solve_direction(sigma, corr, dt, ds, dx);
    {
      const auto [apc, adc] = max_steps_of(dx, ds);
      std::vector<double> dt_plain;
      std::vector<Matrix> ds_plain, dx_plain;
      solve_direction(sigma, {}, dt_plain, ds_plain, dx_plain);
      const auto [app, adp] = max_steps_of(dx_plain, ds_plain);
      if (std::min(app, adp) > 1.2 * std::min(apc, adc)) {
        dt = std::move(dt_plain);
        ds = std::move(ds_plain);
        dx = std::move(dx_plain);
      }
    }

    const double tau = 0.97;
    double ap = 1.0, ad = 1.0;
    for (int bi = 0; bi < nblocks; ++bi) {
      ap = std::min(ap, tau * max_psd_step(x[bi], dx[bi]));
      ad = std::min(ad, tau * max_psd_step(s[bi], ds[bi]));
    }
    ap = std::min(ap, 1.0);
    ad = std::min(ad, 1.0);

    // Guard against rounding past the cone boundary.
    auto steps_ok = [&](double a_p, double a_d) {
      Matrix l;
      for (int bi = 0; bi < nblocks; ++bi) {
        Matrix xa = x[bi];
        xa.add_scaled(dx[bi], a_p);
        if (!cholesky(xa, l)) return false;
        Matrix sa = s[bi];
        sa.add_scaled(ds[bi], a_d);
        if (!cholesky(sa, l)) return false;
      }
      return true;
    };
    int halvings = 0;
    while (!steps_ok(ap, ad) && halvings < 40) {
      ap *= 0.7;
      ad *= 0.7;
      ++halvings;
    }
    if (halvings >= 40)
      return finish(SolveStatus::NumericalBreakdown, "step rejection loop", iter);

    if (ap < 1e-8 && ad < 1e-8) {
      if (++tiny_steps >= 5)
        return finish(SolveStatus::MaxIterations, "steps collapsed", iter);
    } else {
      tiny_steps = 0;
    }

    for (int bi = 0; bi < nblocks; ++bi) {
      x[bi].add_scaled(dx[bi], ap);
      s[bi].add_scaled(ds[bi], ad);
    }
    for (int k = 0; k < m; ++k) t[k] += ad * dt[k];
    out.iterations = iter;
  }

  return finish(SolveStatus::MaxIterations, "iteration limit", opt.max_iters);
}

double eval_reduced(const AffineExpr& e, const std::vector<double>& w0) {
  double v = e.constant;
  for (size_t q = 0; q < e.idx.size(); ++q) v += e.coef[q] * w0[e.idx[q]];
  return v;
}

std::vector<double> reduce_expr(const AffineExpr& e, const Matrix& basis) {
  const int r = basis.cols();
  std::vector<double> row(r, 0.0);
  for (size_t q = 0; q < e.idx.size(); ++q)
    for (int k = 0; k < r; ++k) row[k] += e.coef[q] * basis(e.idx[q], k);
  return row;
}

// Projects out the common kernel of the block's matrix pencil; these are
// structural (the all-ones direction of Laplacian pencils, the centering
// projector of the distance-matrix block) and removing them restores strict
// feasibility for the interior-point iteration.
void deflate_block(ReducedBlock& blk) {
  const int n = blk.dim();
  // Normalize each pencil matrix before accumulating, so the kernel test is
  // about directions rather than magnitudes.
  Matrix gram(n, n);
  auto accumulate = [&](const Matrix& f) {
    const double nrm = f.frobenius_norm();
    if (nrm <= 1e-300) return;
    gram.add_scaled(f * (1.0 / nrm) * (f * (1.0 / nrm)), 1.0);
  };
  accumulate(blk.f0);
  for (const auto& f : blk.fk) accumulate(f);
  gram.symmetrize();
  const SymEig e = eigh(gram);
  const double lam_max = e.values.empty() ? 0.0 : e.values.back();
  if (lam_max <= 1e-300) {
    blk.f0 = Matrix(0, 0);
    for (auto& f : blk.fk) f = Matrix(0, 0);
    return;
  }
  const double cut = 1e-10 * lam_max;
  int kernel = 0;
  while (kernel < n && e.values[kernel] <= cut) ++kernel;
  if (kernel == 0) return;
  const int keep = n - kernel;
  Matrix p(n, keep);
  for (int c = 0; c < keep; ++c)
    for (int i = 0; i < n; ++i) p(i, c) = e.vectors(i, kernel + c);
  const Matrix pt = p.transpose();
  blk.f0 = pt * blk.f0 * p;
  blk.f0.symmetrize();
  for (auto& f : blk.fk) {
    f = pt * f * p;
    f.symmetrize();
  }
}

}  // namespace

ConicSolution solve_conic(const ConicProgram& prog, const SolverOptions& options) {
  ConicSolution sol;
  const int nvars = prog.num_vars;

  auto fill_point = [&](const std::vector<double>& w) {
    sol.w = w;
    sol.alpha = prog.alpha_var >= 0 ? w[prog.alpha_var] : 0.0;
    sol.new_positions.clear();
    for (const auto& pv : prog.positions)
      sol.new_positions.push_back({pv.agent_id, Vec3(w[pv.var_start], w[pv.var_start + 1], w[pv.var_start + 2])});
    if (prog.n_agents > 0) {
      sol.z_opt = Matrix(prog.n_agents, prog.n_agents);
      for (const auto& zv : prog.z_entries) {
        sol.z_opt(zv.i, zv.j) = w[zv.var];
        sol.z_opt(zv.j, zv.i) = w[zv.var];
      }
    }
  };

  // Eliminate the equalities onto the affine feasible subspace.
  const int neq = static_cast<int>(prog.lin_eq.size());
  Matrix a_eq(neq, nvars);
  std::vector<double> b_eq(neq, 0.0);
  for (int row = 0; row < neq; ++row) {
    const AffineExpr& e = prog.lin_eq[row];
    for (size_t q = 0; q < e.idx.size(); ++q) a_eq(row, e.idx[q]) += e.coef[q];
    b_eq[row] = -e.constant;
  }
  const AffineSpan span = affine_span(a_eq, b_eq);
  if (!span.consistent) {
    sol.status = SolveStatus::Infeasible;
    sol.message = "equality constraints are contradictory";
    fill_point(std::vector<double>(nvars, 0.0));
    return sol;
  }
  const std::vector<double>& w0 = span.particular;
  const Matrix& basis = span.null_basis;
  const int r = basis.cols();

  std::vector<double> obj_t(r, 0.0);
  for (int q = 0; q < nvars; ++q) {
    if (prog.objective.empty()) break;
    const double c = prog.objective[q];
    if (c == 0.0) continue;
    for (int k = 0; k < r; ++k) obj_t[k] += c * basis(q, k);
  }

  std::vector<ReducedBlock> blocks;
  auto reject = [&](const std::string& msg) {
    sol.status = SolveStatus::Infeasible;
    sol.message = msg;
    fill_point(w0);
    return sol;
  };

  for (const auto& lmi : prog.lmi_blocks) {
    ReducedBlock blk;
    blk.label = lmi.label;
    blk.f0 = lmi.constant;
    for (size_t q = 0; q < lmi.var_index.size(); ++q)
      blk.f0.add_scaled(lmi.coeff[q], w0[lmi.var_index[q]]);
    blk.fk.assign(r, Matrix(lmi.dim, lmi.dim));
    for (size_t q = 0; q < lmi.var_index.size(); ++q) {
      const int var = lmi.var_index[q];
      for (int k = 0; k < r; ++k) {
        const double c = basis(var, k);
        if (c != 0.0) blk.fk[k].add_scaled(lmi.coeff[q], c);
      }
    }
    blocks.push_back(std::move(blk));
  }

  for (const auto& ineq : prog.lin_ineq) {
    const double val0 = eval_reduced(ineq, w0);
    const std::vector<double> row = reduce_expr(ineq, basis);
    if (inf_norm(row) <= 1e-12) {
      if (val0 < -1e-9) return reject("inequality violated after elimination");
      continue;
    }
    ReducedBlock blk;
    blk.label = "ineq";
    blk.f0 = Matrix(1, 1);
    blk.f0(0, 0) = val0;
    blk.fk.assign(r, Matrix(1, 1));
    for (int k = 0; k < r; ++k) blk.fk[k](0, 0) = row[k];
    blocks.push_back(std::move(blk));
  }

  for (const auto& soc : prog.soc_blocks) {
    const int d = static_cast<int>(soc.tail.size());
    ReducedBlock blk;
    blk.label = soc.label.empty() ? "soc" : soc.label;
    blk.f0 = Matrix(d + 1, d + 1);
    blk.fk.assign(r, Matrix(d + 1, d + 1));
    const double h0 = eval_reduced(soc.head, w0);
    const std::vector<double> hrow = reduce_expr(soc.head, basis);
    for (int i = 0; i <= d; ++i) blk.f0(i, i) = h0;
    for (int k = 0; k < r; ++k)
      for (int i = 0; i <= d; ++i) blk.fk[k](i, i) = hrow[k];
    for (int di = 0; di < d; ++di) {
      const double u0 = eval_reduced(soc.tail[di], w0);
      const std::vector<double> urow = reduce_expr(soc.tail[di], basis);
      blk.f0(0, di + 1) = u0;
      blk.f0(di + 1, 0) = u0;
      for (int k = 0; k < r; ++k) {
        blk.fk[k](0, di + 1) = urow[k];
        blk.fk[k](di + 1, 0) = urow[k];
      }
    }
    blocks.push_back(std::move(blk));
  }

  // Deflate structural kernels; validate and drop constant blocks.
  std::vector<ReducedBlock> active;
  for (auto& blk : blocks) {
    deflate_block(blk);
    if (blk.dim() == 0) continue;
    double dep = 0.0;
    for (const auto& f : blk.fk) dep = std::max(dep, f.max_abs());
    if (dep <= 1e-12 * (1.0 + blk.f0.max_abs())) {
      const SymEig e = eigh(blk.f0);
      const double scale = std::max(1.0, std::fabs(e.values.back()));
      if (e.values.front() < -1e-9 * scale)
        return reject("constant block '" + blk.label + "' is not positive semidefinite");
      continue;
    }
    active.push_back(std::move(blk));
  }

  if (r == 0) {
    sol.status = SolveStatus::Optimal;
    sol.iterations = 0;
    fill_point(w0);
    return sol;
  }
  if (active.empty()) {
    if (norm2(obj_t) <= 1e-12) {
      sol.status = SolveStatus::Optimal;
      fill_point(w0);
      return sol;
    }
    sol.status = SolveStatus::MaxIterations;
    sol.message = "objective unbounded: no cone constraints bind the free variables";
    fill_point(w0);
    return sol;
  }

  if (std::getenv("MASGAME_IPM_DEBUG")) {
    std::fprintf(stderr, "reduced vars=%d, blocks:", r);
    for (const auto& blk : active) std::fprintf(stderr, " %d", blk.dim());
    std::fprintf(stderr, "\n");
  }

  const IpmOutcome ipm = ipm_solve(active, obj_t, options);
  sol.status = ipm.status;
  sol.kkt = ipm.kkt;
  sol.iterations = ipm.iterations;
  sol.message = ipm.message;
  std::vector<double> w = w0;
  for (int q = 0; q < nvars; ++q)
    for (int k = 0; k < r; ++k) w[q] += basis(q, k) * ipm.t[k];
  fill_point(w);
  return sol;
}

}  // namespace masgame
