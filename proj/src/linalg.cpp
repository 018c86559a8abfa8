#include "linalg.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>
#include <stdexcept>

namespace masgame {

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix Matrix::operator*(const Matrix& o) const {
  assert(cols_ == o.rows_);
  Matrix r(rows_, o.cols_);
  for (int i = 0; i < rows_; ++i) {
    for (int k = 0; k < cols_; ++k) {
      const double aik = (*this)(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < o.cols_; ++j) r(i, j) += aik * o(k, j);
    }
  }
  return r;
}

Matrix Matrix::operator+(const Matrix& o) const {
  Matrix r = *this;
  r += o;
  return r;
}

Matrix Matrix::operator-(const Matrix& o) const {
  Matrix r = *this;
  r.add_scaled(o, -1.0);
  return r;
}

Matrix Matrix::operator*(double s) const {
  Matrix r = *this;
  for (auto& v : r.a_) v *= s;
  return r;
}

Matrix& Matrix::operator+=(const Matrix& o) {
  assert(rows_ == o.rows_ && cols_ == o.cols_);
  for (size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
  return *this;
}

Matrix& Matrix::add_scaled(const Matrix& o, double s) {
  assert(rows_ == o.rows_ && cols_ == o.cols_);
  for (size_t i = 0; i < a_.size(); ++i) a_[i] += s * o.a_[i];
  return *this;
}

std::vector<double> Matrix::operator*(const std::vector<double>& v) const {
  assert(static_cast<int>(v.size()) == cols_);
  std::vector<double> r(rows_, 0.0);
  for (int i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (int j = 0; j < cols_; ++j) s += (*this)(i, j) * v[j];
    r[i] = s;
  }
  return r;
}

double Matrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : a_) s += v * v;
  return std::sqrt(s);
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : a_) m = std::max(m, std::fabs(v));
  return m;
}

double Matrix::inner(const Matrix& o) const {
  assert(rows_ == o.rows_ && cols_ == o.cols_);
  double s = 0.0;
  for (size_t i = 0; i < a_.size(); ++i) s += a_[i] * o.a_[i];
  return s;
}

double Matrix::trace() const {
  double s = 0.0;
  for (int i = 0; i < std::min(rows_, cols_); ++i) s += (*this)(i, i);
  return s;
}

void Matrix::symmetrize() {
  assert(rows_ == cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = i + 1; j < cols_; ++j) {
      const double m = 0.5 * ((*this)(i, j) + (*this)(j, i));
      (*this)(i, j) = m;
      (*this)(j, i) = m;
    }
}

namespace {

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = i + 1; j < a.cols(); ++j) s += a(i, j) * a(i, j);
  return std::sqrt(2.0 * s);
}

}  // namespace

SymEig eigh(const Matrix& input) {
  const int n = input.rows();
  assert(n == input.cols());
  Matrix a = input;
  a.symmetrize();
  Matrix v = Matrix::identity(n);

  const double scale = std::max(1.0, a.frobenius_norm());
  const double tol = 1e-15 * scale;
  const int max_sweeps = 64;

  for (int sweep = 0; sweep < max_sweeps && off_diagonal_norm(a) > tol; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::fabs(apq) <= 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  SymEig out;
  out.values.resize(n);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::vector<double> diag(n);
  for (int i = 0; i < n; ++i) diag[i] = a(i, i);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return diag[i] < diag[j]; });

  out.vectors = Matrix(n, n);
  for (int col = 0; col < n; ++col) {
    const int src = order[col];
    out.values[col] = diag[src];
    int imax = 0;
    double vmax = 0.0;
    for (int k = 0; k < n; ++k) {
      if (std::fabs(v(k, src)) > vmax) {
        vmax = std::fabs(v(k, src));
        imax = k;
      }
    }
    const double sign = v(imax, src) < 0.0 ? -1.0 : 1.0;
    for (int k = 0; k < n; ++k) out.vectors(k, col) = sign * v(k, src);
  }
  return out;
}

bool cholesky(const Matrix& a, Matrix& lower) {
  const int n = a.rows();
  assert(n == a.cols());
  lower = Matrix(n, n);
  for (int j = 0; j < n; ++j) {
    double d = a(j, j);
    for (int k = 0; k < j; ++k) d -= lower(j, k) * lower(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    const double ljj = std::sqrt(d);
    lower(j, j) = ljj;
    for (int i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= lower(i, k) * lower(j, k);
      lower(i, j) = s / ljj;
    }
  }
  return true;
}

std::vector<double> cholesky_solve(const Matrix& lower, const std::vector<double>& b) {
  const int n = lower.rows();
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= lower(i, k) * y[k];
    y[i] = s / lower(i, i);
  }
  std::vector<double> x(n);
  for (int i = n - 1; i >= 0; --i) {
    double s = y[i];
    for (int k = i + 1; k < n; ++k) s -= lower(k, i) * x[k];
    x[i] = s / lower(i, i);
  }
  return x;
}

AffineSpan affine_span(const Matrix& a, const std::vector<double>& b, double rel_tol) {
  AffineSpan out;
  const int m = a.rows();
  const int n = a.cols();
  if (m == 0) {
    out.consistent = true;
    out.particular.assign(n, 0.0);
    out.null_basis = Matrix::identity(n);
    return out;
  }
  assert(static_cast<int>(b.size()) == m);

  // Row-equilibrated Gram route: eigendecompose A^T A of the row-normalized
  // system. The rank cut is floored at the Gram noise level (~eps * lam_max),
  // below which eigenvalues carry no rank information.
  Matrix an = a;
  std::vector<double> bn = b;
  for (int r = 0; r < m; ++r) {
    double rn = 0.0;
    for (int c = 0; c < n; ++c) rn += an(r, c) * an(r, c);
    rn = std::sqrt(rn);
    if (rn > 0.0) {
      for (int c = 0; c < n; ++c) an(r, c) /= rn;
      bn[r] /= rn;
    }
  }
  const Matrix at = an.transpose();
  const Matrix gram = at * an;
  const SymEig eig = eigh(gram);

  const double lam_max = eig.values.empty() ? 0.0 : std::max(0.0, eig.values.back());
  const double sigma_cut = rel_tol * std::max(std::sqrt(lam_max), 1.0);
  const double lam_cut = std::max(sigma_cut * sigma_cut, 1e-12 * std::max(lam_max, 1.0));

  std::vector<double> atb(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int k = 0; k < m; ++k) s += an(k, i) * bn[k];
    atb[i] = s;
  }

  out.particular.assign(n, 0.0);
  int null_dim = 0;
  for (int c = 0; c < n; ++c) {
    if (eig.values[c] <= lam_cut) {
      ++null_dim;
      continue;
    }
    double proj = 0.0;
    for (int k = 0; k < n; ++k) proj += eig.vectors(k, c) * atb[k];
    proj /= eig.values[c];
    for (int k = 0; k < n; ++k) out.particular[k] += proj * eig.vectors(k, c);
  }

  out.null_basis = Matrix(n, null_dim);
  int col = 0;
  for (int c = 0; c < n; ++c) {
    if (eig.values[c] > lam_cut) continue;
    for (int k = 0; k < n; ++k) out.null_basis(k, col) = eig.vectors(k, c);
    ++col;
  }

  const std::vector<double> resid = an * out.particular;
  double max_resid = 0.0;
  for (int i = 0; i < m; ++i) max_resid = std::max(max_resid, std::fabs(resid[i] - bn[i]));
  out.consistent = max_resid <= 1e-8 * (1.0 + inf_norm(bn));
  return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

double inf_norm(const std::vector<double>& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::fabs(v));
  return m;
}

}  // namespace masgame
