// Small dense linear algebra: row-major matrices, partial-pivot LU solves,
// Jacobi eigenvalues for symmetric matrices, and definiteness tests.
// Everything here is sized for filter state dimensions (n of a few dozen
// at most); no attempt is made at large-scale performance.
#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <vector>

namespace tvkf {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> entries);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(const Vector& d);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

namespace linalg {

// Elementwise vector helpers.
Vector add(const Vector& a, const Vector& b);
Vector sub(const Vector& a, const Vector& b);
Vector scale(double s, const Vector& a);
// a + s*b
Vector axpy(const Vector& a, double s, const Vector& b);
double dot(const Vector& a, const Vector& b);
double norm2(const Vector& a);
double norm_inf(const Vector& a);

Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(double s, const Matrix& a);
Matrix transpose(const Matrix& m);
Matrix matmul(const Matrix& a, const Matrix& b);
Vector matvec(const Matrix& a, const Vector& x);
double norm_inf(const Matrix& m);
double max_abs(const Matrix& m);
Matrix symmetrize(const Matrix& m);
// vvᵀ scaled outer product
Matrix outer(const Vector& u, const Vector& v);

bool is_symmetric(const Matrix& m, double rel_tol = 1e-12);
void require_symmetric(const Matrix& m, double rel_tol = 1e-12);

// Partial-pivot LU solve; throws SingularMatrix when a pivot falls below
// 1e-13 * ||A||_inf.
Vector solve_linear(const Matrix& a, const Vector& b);
// Same factorization applied to every column of B.
Matrix solve_linear(const Matrix& a, const Matrix& b);
Matrix inverse(const Matrix& a);

// All eigenvalues of a symmetric matrix by cyclic Jacobi rotations,
// returned in ascending order.
Vector sym_eigenvalues(const Matrix& m);
double sym_eig_max(const Matrix& m);
double sym_eig_min(const Matrix& m);

// True iff lambda_max(M) <= tol.
bool is_nsd(const Matrix& m, double tol);
bool is_psd(const Matrix& m, double tol);

// Largest singular value (via eigenvalues of MᵀM).
double spectral_norm(const Matrix& m);

// Lower Cholesky factor, or nullopt if the matrix is not PSD within
// roundoff (tiny negative diagonals are clamped to zero).
std::optional<Matrix> cholesky(const Matrix& m);

}  // namespace linalg
}  // namespace tvkf
