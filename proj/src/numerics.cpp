#include "convexnn/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace convexnn {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, Vector data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == rows_ * cols_, "matrix: data size mismatch");
  require(all_finite(data_), "matrix: non-finite entry");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require(r.size() == cols_, "matrix: ragged rows");
    data_.insert(data_.end(), r.begin(), r.end());
  }
  require(all_finite(data_), "matrix: non-finite entry");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Vector Matrix::row(std::size_t i) const {
  return Vector(data_.begin() + i * cols_, data_.begin() + (i + 1) * cols_);
}

Vector Matrix::col(std::size_t j) const {
  Vector c(rows_);
  for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
  return c;
}

void Matrix::set_row(std::size_t i, const Vector& r) {
  require(r.size() == cols_, "matrix: row size mismatch");
  std::copy(r.begin(), r.end(), data_.begin() + i * cols_);
}

void Matrix::set_col(std::size_t j, const Vector& c) {
  require(c.size() == rows_, "matrix: col size mismatch");
  for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = c[i];
}

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols) {}

double dot(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

double norm1(const Vector& a) {
  double s = 0.0;
  for (double v : a) s += std::abs(v);
  return s;
}

double inf_norm(const Vector& a) {
  double s = 0.0;
  for (double v : a) s = std::max(s, std::abs(v));
  return s;
}

void axpy(double alpha, const Vector& x, Vector& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

Vector scaled(const Vector& a, double s) {
  Vector r(a);
  for (double& v : r) v *= s;
  return r;
}

Vector add(const Vector& a, const Vector& b) {
  Vector r(a);
  for (std::size_t i = 0; i < b.size(); ++i) r[i] += b[i];
  return r;
}

Vector sub(const Vector& a, const Vector& b) {
  Vector r(a);
  for (std::size_t i = 0; i < b.size(); ++i) r[i] -= b[i];
  return r;
}

bool all_finite(const Vector& a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

Vector matvec(const Matrix& a, const Vector& x) {
  require(x.size() == a.cols(), "matvec: size mismatch");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

Vector matTvec(const Matrix& a, const Vector& x) {
  require(x.size() == a.rows(), "matTvec: size mismatch");
  Vector y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double xi = x[i];
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += a(i, j) * xi;
  }
  return y;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul: size mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

double frob_norm(const Matrix& a) { return norm2(a.data()); }

CVector cmatvec(const ComplexMatrix& a, const CVector& x) {
  require(x.size() == a.cols(), "cmatvec: size mismatch");
  CVector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::complex<double> s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

CVector cmatHvec(const ComplexMatrix& a, const CVector& x) {
  require(x.size() == a.rows(), "cmatHvec: size mismatch");
  CVector y(a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += std::conj(a(i, j)) * x[i];
  return y;
}

std::size_t SvdResult::rank(double rel_tol) const {
  if (sigma.empty()) return 0;
  const double cut = rel_tol * sigma.front();
  std::size_t r = 0;
  for (double s : sigma)
    if (s > cut) ++r;
  return r;
}

namespace {

// One-sided Jacobi on b (rows >= cols): rotates column pairs until all are
// mutually orthogonal, then sigma_j = ||b_j|| and u_j = b_j / sigma_j.
void jacobi_sweeps(Matrix& b, Matrix& v) {
  const std::size_t m = b.rows(), n = b.cols();
  const double eps = 1e-15;
  for (int sweep = 0; sweep < 120; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          const double bp = b(i, p), bq = b(i, q);
          app += bp * bp;
          aqq += bq * bq;
          apq += bp * bq;
        }
        if (apq == 0.0 || std::abs(apq) <= eps * std::sqrt(app * aqq)) continue;
        rotated = true;
        const double zeta = (aqq - app) / (2.0 * apq);
        const double t =
            (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double bp = b(i, p), bq = b(i, q);
          b(i, p) = c * bp - s * bq;
          b(i, q) = s * bp + c * bq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }
}

// Fills u columns flagged as zero with unit vectors orthonormal to the rest.
void complete_orthonormal(Matrix& u, std::vector<char>& needs_fill) {
  const std::size_t m = u.rows(), k = u.cols();
  for (std::size_t j = 0; j < k; ++j) {
    if (!needs_fill[j]) continue;
    Vector best;
    double best_norm = -1.0;
    for (std::size_t axis = 0; axis < m; ++axis) {
      Vector g(m, 0.0);
      g[axis] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t c = 0; c < k; ++c) {
          if (needs_fill[c]) continue;
          double proj = 0.0;
          for (std::size_t i = 0; i < m; ++i) proj += u(i, c) * g[i];
          for (std::size_t i = 0; i < m; ++i) g[i] -= proj * u(i, c);
        }
      }
      const double gn = norm2(g);
      if (gn > best_norm) {
        best_norm = gn;
        best = std::move(g);
      }
      if (best_norm > 0.7) break;
    }
    require(best_norm > 0.0, "svd: cannot complete orthonormal basis");
    for (std::size_t i = 0; i < m; ++i) u(i, j) = best[i] / best_norm;
    needs_fill[j] = 0;
  }
}

}  // namespace

SvdResult svd(const Matrix& a) {
  require(!a.empty(), "svd: empty matrix");
  const bool flip = a.rows() < a.cols();
  Matrix b = flip ? transpose(a) : a;
  const std::size_t m = b.rows(), n = b.cols();
  Matrix v = Matrix::identity(n);
  jacobi_sweeps(b, v);

  Vector sig(n);
  for (std::size_t j = 0; j < n; ++j) sig[j] = norm2(b.col(j));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sig[x] > sig[y]; });

  Matrix u_s(m, n), v_s(n, n);
  Vector sigma(n);
  std::vector<char> needs_fill(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    sigma[j] = sig[src];
    for (std::size_t i = 0; i < n; ++i) v_s(i, j) = v(i, src);
    if (sigma[j] > 1e-290) {
      for (std::size_t i = 0; i < m; ++i) u_s(i, j) = b(i, src) / sigma[j];
    } else {
      sigma[j] = 0.0;
      needs_fill[j] = 1;
    }
  }
  complete_orthonormal(u_s, needs_fill);

  SvdResult r;
  if (flip) {
    r.u = std::move(v_s);
    r.v = std::move(u_s);
  } else {
    r.u = std::move(u_s);
    r.v = std::move(v_s);
  }
  r.sigma = std::move(sigma);
  return r;
}

Vector least_squares(const Matrix& a, const Vector& b, double rel_tol) {
  const SvdResult s = svd(a);
  const double cut = s.sigma.empty() ? 0.0 : rel_tol * s.sigma.front();
  Vector x(a.cols(), 0.0);
  for (std::size_t j = 0; j < s.sigma.size(); ++j) {
    if (s.sigma[j] <= cut || s.sigma[j] == 0.0) continue;
    double uj_b = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) uj_b += s.u(i, j) * b[i];
    const double coef = uj_b / s.sigma[j];
    for (std::size_t i = 0; i < a.cols(); ++i) x[i] += coef * s.v(i, j);
  }
  return x;
}

Cholesky Cholesky::factor(const Matrix& spd) {
  require(spd.rows() == spd.cols(), "cholesky: not square");
  const std::size_t n = spd.rows();
  Cholesky c;
  c.l_ = Matrix(n, n);
  Matrix& l = c.l_;
  for (std::size_t j = 0; j < n; ++j) {
    double d = spd(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    require(d > 0.0, "cholesky: not positive definite");
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = spd(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return c;
}

Vector Cholesky::solve(const Vector& rhs) const {
  const std::size_t n = l_.rows();
  require(rhs.size() == n, "cholesky: rhs size mismatch");
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = rhs[i];
    for (std::size_t k = 0; k < i; ++k) s -= l_(i, k) * y[k];
    y[i] = s / l_(i, i);
  }
  Vector x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l_(k, ii) * x[k];
    x[ii] = s / l_(ii, ii);
  }
  return x;
}

namespace {

Vector power_start(std::size_t n) {
  Vector v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 1e-3 * static_cast<double>(i % 97);
  const double nv = norm2(v);
  for (double& x : v) x /= nv;
  return v;
}

}  // namespace

double power_sigma_max(const Matrix& a, double tol, std::size_t max_iter) {
  require(!a.empty(), "power_sigma_max: empty matrix");
  Vector v = power_start(a.cols());
  double est = 0.0, prev = -1.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    Vector w = matvec(a, v);
    est = norm2(w);
    if (est == 0.0) {
      // Start vector may sit in the null space; fall back to axis probes.
      bool nonzero = false;
      for (std::size_t j = 0; j < a.cols() && !nonzero; ++j) {
        Vector e(a.cols(), 0.0);
        e[j] = 1.0;
        w = matvec(a, e);
        if (norm2(w) > 0.0) {
          v = e;
          nonzero = true;
        }
      }
      if (!nonzero) return 0.0;
      continue;
    }
    if (prev >= 0.0 && std::abs(est - prev) <= tol * std::max(est, 1e-300)) return est;
    prev = est;
    Vector z = matTvec(a, w);
    const double nz = norm2(z);
    if (nz == 0.0) return est;
    for (std::size_t i = 0; i < z.size(); ++i) v[i] = z[i] / nz;
  }
  throw power_iteration_error("power_sigma_max: no convergence", est, max_iter);
}

double power_sigma_max(const ComplexMatrix& a, double tol, std::size_t max_iter) {
  require(a.rows() > 0 && a.cols() > 0, "power_sigma_max: empty matrix");
  CVector v(a.cols());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = std::complex<double>(1.0 + 1e-3 * static_cast<double>(i % 97), 0.0);
  double nv = 0.0;
  for (const auto& x : v) nv += std::norm(x);
  nv = std::sqrt(nv);
  for (auto& x : v) x /= nv;

  double est = 0.0, prev = -1.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    CVector w = cmatvec(a, v);
    double nw = 0.0;
    for (const auto& x : w) nw += std::norm(x);
    est = std::sqrt(nw);
    if (est == 0.0) return 0.0;
    if (prev >= 0.0 && std::abs(est - prev) <= tol * std::max(est, 1e-300)) return est;
    prev = est;
    CVector z = cmatHvec(a, w);
    double nz = 0.0;
    for (const auto& x : z) nz += std::norm(x);
    nz = std::sqrt(nz);
    if (nz == 0.0) return est;
    for (auto& x : z) x /= nz;
    v = std::move(z);
  }
  throw power_iteration_error("power_sigma_max: no convergence", est, max_iter);
}

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_radix2(CVector& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t j = 0; j < len / 2; ++j) {
        const auto w = std::polar(1.0, ang * static_cast<double>(j));
        const auto u = a[i + j];
        const auto t = a[i + j + len / 2] * w;
        a[i + j] = u + t;
        a[i + j + len / 2] = u - t;
      }
    }
  }
  if (inverse)
    for (auto& x : a) x /= static_cast<double>(n);
}

CVector dft_direct(const CVector& x, bool inverse) {
  const std::size_t n = x.size();
  CVector out(n);
  const double sign = inverse ? 2.0 : -2.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> s = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t kt = (k * t) % n;
      s += x[t] * std::polar(1.0, sign * kPi * static_cast<double>(kt) / static_cast<double>(n));
    }
    out[k] = inverse ? s / static_cast<double>(n) : s;
  }
  return out;
}

}  // namespace

CVector fft(const CVector& x) {
  if (x.empty()) return {};
  if (is_pow2(x.size())) {
    CVector a = x;
    fft_radix2(a, false);
    return a;
  }
  return dft_direct(x, false);
}

CVector ifft(const CVector& x) {
  if (x.empty()) return {};
  if (is_pow2(x.size())) {
    CVector a = x;
    fft_radix2(a, true);
    return a;
  }
  return dft_direct(x, true);
}

ComplexMatrix dft_rows(const Matrix& x) {
  ComplexMatrix out(x.rows(), x.cols());
  CVector buf(x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) buf[j] = x(i, j);
    CVector f = fft(buf);
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = f[j];
  }
  return out;
}

namespace {

// Least squares on the passive columns: Gram/Cholesky fast path with an
// SVD minimum-norm fallback when the Gram matrix is numerically singular.
Vector solve_passive(const Matrix& a, const Vector& b, const std::vector<std::size_t>& idx) {
  const std::size_t m = a.rows(), p = idx.size();
  Matrix g(p, p);
  Vector rhs(p, 0.0);
  for (std::size_t r = 0; r < p; ++r) {
    for (std::size_t c = r; c < p; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += a(i, idx[r]) * a(i, idx[c]);
      g(r, c) = s;
      g(c, r) = s;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += a(i, idx[r]) * b[i];
    rhs[r] = s;
  }
  double max_diag = 0.0;
  for (std::size_t r = 0; r < p; ++r) max_diag = std::max(max_diag, g(r, r));
  bool fallback = max_diag <= 0.0;
  if (!fallback) {
    // Reject ill-conditioned Gram systems before factoring.
    for (std::size_t r = 0; r < p; ++r)
      if (g(r, r) < 1e-13 * max_diag) fallback = true;
  }
  if (!fallback) {
    try {
      return Cholesky::factor(g).solve(rhs);
    } catch (const std::invalid_argument&) {
      fallback = true;
    }
  }
  Matrix ap(m, p);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t c = 0; c < p; ++c) ap(i, c) = a(i, idx[c]);
  return least_squares(ap, b);
}

}  // namespace

Vector nnls(const Matrix& a, const Vector& b, double tol, std::size_t max_iter) {
  const std::size_t m = a.rows(), k = a.cols();
  require(b.size() == m, "nnls: rhs size mismatch");
  if (max_iter == 0) max_iter = 50 * k + 100;

  Vector x(k, 0.0);
  std::vector<char> passive(k, 0), banned(k, 0);
  Vector w = matTvec(a, b);
  if (tol <= 0.0) tol = 1e-12 * (1.0 + inf_norm(w));

  std::size_t iters = 0;
  while (true) {
    // Entering variable: most positive gradient among free, unbanned columns.
    std::ptrdiff_t best = -1;
    double best_w = tol;
    for (std::size_t j = 0; j < k; ++j) {
      if (passive[j] || banned[j]) continue;
      if (w[j] > best_w) {
        best_w = w[j];
        best = static_cast<std::ptrdiff_t>(j);
      }
    }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = 1;

    bool x_changed = false;
    while (true) {
      if (++iters > max_iter) throw nnls_error("nnls: iteration cap exceeded", iters);
      std::vector<std::size_t> idx;
      for (std::size_t j = 0; j < k; ++j)
        if (passive[j]) idx.push_back(j);
      if (idx.empty()) break;
      Vector z = solve_passive(a, b, idx);

      double min_z = z.empty() ? 1.0 : *std::min_element(z.begin(), z.end());
      if (min_z > 0.0) {
        for (std::size_t r = 0; r < idx.size(); ++r) x[idx[r]] = z[r];
        x_changed = true;
        break;
      }
      // Blocking step toward z staying inside x >= 0.
      double alpha = 1.0;
      std::size_t blocker = idx.size();
      for (std::size_t r = 0; r < idx.size(); ++r) {
        if (z[r] > 0.0) continue;
        const double denom = x[idx[r]] - z[r];
        const double step = denom > 0.0 ? x[idx[r]] / denom : 0.0;
        if (step < alpha) {
          alpha = step;
          blocker = r;
        }
      }
      double x_max = 0.0;
      for (std::size_t r = 0; r < idx.size(); ++r) {
        x[idx[r]] = std::max(0.0, x[idx[r]] + alpha * (z[r] - x[idx[r]]));
        x_max = std::max(x_max, x[idx[r]]);
      }
      if (alpha > 0.0) x_changed = true;
      for (std::size_t r = 0; r < idx.size(); ++r) {
        const bool force = (r == blocker);
        if (z[r] <= 0.0 && (force || x[idx[r]] <= 1e-13 * x_max)) {
          x[idx[r]] = 0.0;
          passive[idx[r]] = 0;
        }
      }
    }

    if (!x_changed && !passive[static_cast<std::size_t>(best)]) {
      // Degenerate entering column; keep it out until progress happens.
      banned[static_cast<std::size_t>(best)] = 1;
    } else if (x_changed) {
      std::fill(banned.begin(), banned.end(), 0);
    }

    Vector r = b;
    for (std::size_t j = 0; j < k; ++j) {
      if (x[j] == 0.0) continue;
      for (std::size_t i = 0; i < m; ++i) r[i] -= a(i, j) * x[j];
    }
    w = matTvec(a, r);
  }
  return x;
}

}  // namespace convexnn
