#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace convexnn {

using Vector = std::vector<double>;
using CVector = std::vector<std::complex<double>>;

/// Relative cutoff under which a singular value is treated as zero.
inline constexpr double kRankTolRel = 1e-10;

/// Dense row-major matrix. Constructors reject non-finite entries.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);
  Matrix(std::size_t rows, std::size_t cols, Vector data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }
  const Vector& data() const { return data_; }
  Vector& data() { return data_; }

  Vector row(std::size_t i) const;
  Vector col(std::size_t j) const;
  void set_row(std::size_t i, const Vector& r);
  void set_col(std::size_t j, const Vector& c);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector data_;
};

/// Dense row-major complex matrix.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols);

  std::complex<double>& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const std::complex<double>& operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  CVector data_;
};

// ---- vector helpers ----

double dot(const Vector& a, const Vector& b);
double norm2(const Vector& a);
double norm1(const Vector& a);
double inf_norm(const Vector& a);
void axpy(double alpha, const Vector& x, Vector& y);  // y += alpha * x
Vector scaled(const Vector& a, double s);
Vector add(const Vector& a, const Vector& b);
Vector sub(const Vector& a, const Vector& b);
bool all_finite(const Vector& a);

// ---- matrix helpers ----

Vector matvec(const Matrix& a, const Vector& x);
Vector matTvec(const Matrix& a, const Vector& x);  // a^T x
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
double frob_norm(const Matrix& a);

CVector cmatvec(const ComplexMatrix& a, const CVector& x);
CVector cmatHvec(const ComplexMatrix& a, const CVector& x);  // conjugate transpose

// ---- factorizations ----

/// Thin SVD a = u * diag(sigma) * v^T.
/// u (m x k) and v (n x k), k = min(m, n), have orthonormal columns even when
/// a is rank deficient; sigma is sorted descending.
struct SvdResult {
  Matrix u;
  Vector sigma;
  Matrix v;

  std::size_t rank(double rel_tol = kRankTolRel) const;
};

/// One-sided Jacobi SVD. Accurate to ~machine precision at the sizes this
/// library targets (hundreds of rows/cols).
SvdResult svd(const Matrix& a);

/// Minimum-norm least squares via SVD with relative rank cutoff.
Vector least_squares(const Matrix& a, const Vector& b, double rel_tol = kRankTolRel);

/// Cholesky factorization of a symmetric positive definite matrix.
/// factor() throws std::invalid_argument when a pivot is not positive.
class Cholesky {
 public:
  static Cholesky factor(const Matrix& spd);
  Vector solve(const Vector& rhs) const;
  std::size_t dim() const { return l_.rows(); }

 private:
  Matrix l_;
};

struct power_iteration_error : std::runtime_error {
  power_iteration_error(const std::string& what, double estimate, std::size_t iters)
      : std::runtime_error(what), last_estimate(estimate), iterations(iters) {}
  double last_estimate;
  std::size_t iterations;
};

/// Largest singular value by power iteration on a^T a. Deterministic start;
/// a zero matrix yields 0. Throws power_iteration_error when the relative
/// change has not fallen below tol within max_iter iterations.
double power_sigma_max(const Matrix& a, double tol = 1e-12, std::size_t max_iter = 20000);
double power_sigma_max(const ComplexMatrix& a, double tol = 1e-12, std::size_t max_iter = 20000);

// ---- discrete Fourier transform ----

/// Unnormalized forward transform: out[k] = sum_t x[t] exp(-2*pi*i*k*t/n).
/// Radix-2 Cooley-Tukey when n is a power of two, direct evaluation otherwise.
CVector fft(const CVector& x);
/// Inverse of fft (includes the 1/n factor).
CVector ifft(const CVector& x);

/// Applies the unnormalized forward transform to every row of a real matrix.
ComplexMatrix dft_rows(const Matrix& x);

// ---- nonnegative least squares ----

struct nnls_error : std::runtime_error {
  nnls_error(const std::string& what, std::size_t iters)
      : std::runtime_error(what), iterations(iters) {}
  std::size_t iterations;
};

/// Lawson-Hanson active-set solver for min ||a x - b|| s.t. x >= 0.
/// Exact at termination: the returned x satisfies the KKT conditions up to
/// the inner least-squares accuracy. tol <= 0 picks a scale-aware default;
/// max_iter == 0 picks 50 * cols + 100. Throws nnls_error past the cap.
Vector nnls(const Matrix& a, const Vector& b, double tol = -1.0, std::size_t max_iter = 0);

}  // namespace convexnn
