#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace masgame {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3() = default;
  Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double squared_norm() const { return dot(*this); }
  double norm() const { return std::sqrt(squared_norm()); }
  double inf_norm() const {
    return std::max({std::fabs(x), std::fabs(y), std::fabs(z)});
  }
};

// Dense row-major matrix. Everything in this project is small (n <= a few
// dozen), so no attempt is made at blocking or sparsity.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols, 0.0) {}

  static Matrix identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double& operator()(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }

  Matrix transpose() const;
  Matrix operator*(const Matrix& o) const;
  Matrix operator+(const Matrix& o) const;
  Matrix operator-(const Matrix& o) const;
  Matrix operator*(double s) const;
  Matrix& operator+=(const Matrix& o);
  Matrix& add_scaled(const Matrix& o, double s);

  std::vector<double> operator*(const std::vector<double>& v) const;

  double frobenius_norm() const;
  double max_abs() const;
  // <A, B> = tr(A^T B)
  double inner(const Matrix& o) const;
  double trace() const;
  void symmetrize();

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<double> a_;
};

// Symmetric eigendecomposition, A = V diag(values) V^T, eigenvalues ascending.
// Cyclic Jacobi; deterministic for identical input. Eigenvector sign is fixed
// so the entry of largest magnitude is positive.
struct SymEig {
  std::vector<double> values;
  Matrix vectors;  // columns
};
SymEig eigh(const Matrix& a);

// Lower Cholesky factor of a symmetric positive definite matrix.
// Returns false on a non-positive pivot (matrix not PD to working precision).
bool cholesky(const Matrix& a, Matrix& lower);

// Solve L y = b then L^T x = y.
std::vector<double> cholesky_solve(const Matrix& lower, const std::vector<double>& b);

// Minimum-norm solution of A w = b together with an orthonormal basis of
// null(A). Rank decisions use singular values below rel_tol * sigma_max.
struct AffineSpan {
  bool consistent = false;
  std::vector<double> particular;
  Matrix null_basis;  // n x dim(null)
};
AffineSpan affine_span(const Matrix& a, const std::vector<double>& b, double rel_tol = 1e-11);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm2(const std::vector<double>& a);
double inf_norm(const std::vector<double>& a);

}  // namespace masgame
