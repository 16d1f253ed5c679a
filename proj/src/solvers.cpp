#include "convexnn/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace convexnn {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

Vector cone_project(const Vector& x, const Matrix& a) {
  if (a.rows() == 0) return x;
  require(a.cols() == x.size(), "cone_project: size mismatch");
  const Matrix at = transpose(a);
  const Vector lam = nnls(at, scaled(x, -1.0));
  Vector proj = x;
  for (std::size_t j = 0; j < a.rows(); ++j) {
    if (lam[j] == 0.0) continue;
    for (std::size_t i = 0; i < x.size(); ++i) proj[i] += a(j, i) * lam[j];
  }
  return proj;
}

Vector group_soft_threshold(const Vector& g, double tau) {
  require(tau >= 0.0, "group_soft_threshold: negative threshold");
  const double n = norm2(g);
  if (n <= tau) return Vector(g.size(), 0.0);
  return scaled(g, 1.0 - tau / n);
}

namespace {

// Shared state of the consensus splitting z = (fit block, shrink block,
// cone block) for solve_group_cone.
struct GroupWork {
  const ConvexTrainingProblem* p = nullptr;
  std::size_t n = 0, d = 0, groups = 0;
  std::vector<const std::vector<bool>*> mask;  // per group
  std::vector<double> sign;                    // +1 v-branch, -1 w-branch
  std::vector<Matrix> cone_rows;               // (2D - I) x per group
  Cholesky normal;                             // F^T F + 2 I

  // fit = sum_g sign_g * mask_g(x t_g)
  Vector apply_f(const Vector& x_stacked) const {
    Vector fit(n, 0.0);
    for (std::size_t g = 0; g < groups; ++g) {
      const auto& m = *mask[g];
      for (std::size_t i = 0; i < n; ++i) {
        if (!m[i]) continue;
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += p->x(i, j) * x_stacked[g * d + j];
        fit[i] += sign[g] * s;
      }
    }
    return fit;
  }

  Vector apply_ft(const Vector& r) const {
    Vector out(groups * d, 0.0);
    for (std::size_t g = 0; g < groups; ++g) {
      const auto& m = *mask[g];
      for (std::size_t i = 0; i < n; ++i) {
        if (!m[i]) continue;
        const double c = sign[g] * r[i];
        for (std::size_t j = 0; j < d; ++j) out[g * d + j] += p->x(i, j) * c;
      }
    }
    return out;
  }
};

GroupWork build_group_work(const ConvexTrainingProblem& p) {
  GroupWork w;
  w.p = &p;
  w.n = p.x.rows();
  w.d = p.x.cols();
  w.groups = 2 * p.patterns.size();
  w.mask.resize(w.groups);
  w.sign.resize(w.groups);
  w.cone_rows.reserve(w.groups);
  for (std::size_t i = 0; i < p.patterns.size(); ++i) {
    const auto& m = p.patterns.patterns[i].mask;
    Matrix rows(w.n, w.d);
    for (std::size_t r = 0; r < w.n; ++r) {
      const double s = m[r] ? 1.0 : -1.0;
      for (std::size_t j = 0; j < w.d; ++j) rows(r, j) = s * p.x(r, j);
    }
    w.mask[2 * i] = &m;
    w.mask[2 * i + 1] = &m;
    w.sign[2 * i] = 1.0;
    w.sign[2 * i + 1] = -1.0;
    w.cone_rows.push_back(rows);
    w.cone_rows.push_back(std::move(rows));
  }

  // Normal matrix F^T F + 2 I; block (g,h) = sign_g sign_h x^T D_gh x with
  // D_gh the intersection of the two masks. rho-independent, factored once.
  const std::size_t dim = w.groups * w.d;
  Matrix normal(dim, dim);
  for (std::size_t g = 0; g < w.groups; ++g) {
    for (std::size_t h = g; h < w.groups; ++h) {
      Matrix block(w.d, w.d);
      bool any = false;
      for (std::size_t r = 0; r < w.n; ++r) {
        if (!(*w.mask[g])[r] || !(*w.mask[h])[r]) continue;
        any = true;
        for (std::size_t a = 0; a < w.d; ++a) {
          const double xa = p.x(r, a);
          if (xa == 0.0) continue;
          for (std::size_t b = 0; b < w.d; ++b) block(a, b) += xa * p.x(r, b);
        }
      }
      if (!any) continue;
      const double ss = w.sign[g] * w.sign[h];
      for (std::size_t a = 0; a < w.d; ++a)
        for (std::size_t b = 0; b < w.d; ++b) {
          normal(g * w.d + a, h * w.d + b) = ss * block(a, b);
          normal(h * w.d + b, g * w.d + a) = ss * block(a, b);
        }
    }
  }
  for (std::size_t i = 0; i < dim; ++i) normal(i, i) += 2.0;
  w.normal = Cholesky::factor(normal);
  return w;
}

// prox of the data-fit loss with weight rho: argmin_t loss(t) + rho/2 (t-c)^2.
Vector loss_prox(LossKind loss, const Vector& y, const Vector& c, double rho) {
  Vector z(c.size());
  if (loss == LossKind::squared) {
    for (std::size_t i = 0; i < c.size(); ++i) z[i] = (y[i] + rho * c[i]) / (1.0 + rho);
    return z;
  }
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double m = y[i] * c[i];
    if (m >= 1.0)
      z[i] = c[i];
    else if (m <= 1.0 - 1.0 / rho)
      z[i] = c[i] + y[i] / rho;
    else
      z[i] = y[i];  // kink: y_i t = 1 with y_i in {-1,+1}
  }
  return z;
}

}  // namespace

GroupSolveResult solve_group_cone(const ConvexTrainingProblem& p, const SolverConfig& cfg) {
  validate(p);
  require(cfg.rho > 0.0 && cfg.max_iter > 0, "solve_group_cone: bad config");
  GroupWork work = build_group_work(p);
  const std::size_t n = work.n, d = work.d, groups = work.groups;
  const std::size_t xdim = groups * d;
  const std::size_t zdim = n + 2 * xdim;
  const double relax = 1.6;

  double rho = cfg.rho;
  Vector x(xdim, 0.0);
  Vector z0(n, 0.0), z1(xdim, 0.0), z2(xdim, 0.0);
  Vector u0(n, 0.0), u1(xdim, 0.0), u2(xdim, 0.0);

  SolverDiagnostics diag;
  diag.objective_trace.reserve(std::min<std::size_t>(cfg.max_iter, 1 << 20));

  auto group_slice = [&](const Vector& v, std::size_t g) {
    return Vector(v.begin() + g * d, v.begin() + (g + 1) * d);
  };

  std::size_t it = 0;
  for (; it < cfg.max_iter; ++it) {
    // x-update: (F^T F + 2 I) x = F^T (z0 - u0) + (z1 - u1) + (z2 - u2)
    Vector rhs = work.apply_ft(sub(z0, u0));
    for (std::size_t i = 0; i < xdim; ++i) rhs[i] += (z1[i] - u1[i]) + (z2[i] - u2[i]);
    x = work.normal.solve(rhs);

    const Vector fx = work.apply_f(x);

    // Over-relaxed consensus points.
    Vector h0(n), h1(xdim), h2(xdim);
    for (std::size_t i = 0; i < n; ++i) h0[i] = relax * fx[i] + (1.0 - relax) * z0[i];
    for (std::size_t i = 0; i < xdim; ++i) h1[i] = relax * x[i] + (1.0 - relax) * z1[i];
    for (std::size_t i = 0; i < xdim; ++i) h2[i] = relax * x[i] + (1.0 - relax) * z2[i];

    const Vector z0_old = z0, z1_old = z1, z2_old = z2;
    z0 = loss_prox(p.loss, p.y, add(h0, u0), rho);
    for (std::size_t g = 0; g < groups; ++g) {
      const Vector c1 = add(group_slice(h1, g), group_slice(u1, g));
      const Vector s1 = group_soft_threshold(c1, p.beta / rho);
      std::copy(s1.begin(), s1.end(), z1.begin() + g * d);
      const Vector c2 = add(group_slice(h2, g), group_slice(u2, g));
      const Vector s2 = cone_project(c2, work.cone_rows[g]);
      std::copy(s2.begin(), s2.end(), z2.begin() + g * d);
    }

    for (std::size_t i = 0; i < n; ++i) u0[i] += h0[i] - z0[i];
    for (std::size_t i = 0; i < xdim; ++i) u1[i] += h1[i] - z1[i];
    for (std::size_t i = 0; i < xdim; ++i) u2[i] += h2[i] - z2[i];

    // Residuals on the unrelaxed iterates.
    double r2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) r2 += (fx[i] - z0[i]) * (fx[i] - z0[i]);
    for (std::size_t i = 0; i < xdim; ++i) {
      r2 += (x[i] - z1[i]) * (x[i] - z1[i]);
      r2 += (x[i] - z2[i]) * (x[i] - z2[i]);
    }
    const double r_pri = std::sqrt(r2);

    Vector dz0 = sub(z0, z0_old);
    Vector sdual = work.apply_ft(dz0);
    for (std::size_t i = 0; i < xdim; ++i) sdual[i] += (z1[i] - z1_old[i]) + (z2[i] - z2_old[i]);
    const double r_dual = rho * norm2(sdual);

    // Cheap objective trace at the shrink block (exact zeros preserved).
    {
      const Vector fz = work.apply_f(z1);
      double pen = 0.0;
      for (std::size_t g = 0; g < groups; ++g) pen += norm2(group_slice(z1, g));
      diag.objective_trace.push_back(loss_value(p.loss, fz, p.y) + p.beta * pen);
    }

    double mxz = 0.0;
    {
      double nmx2 = dot(fx, fx) + 2.0 * dot(x, x);
      double nz2 = dot(z0, z0) + dot(z1, z1) + dot(z2, z2);
      mxz = std::sqrt(std::max(nmx2, nz2));
    }
    Vector mtu = work.apply_ft(u0);
    for (std::size_t i = 0; i < xdim; ++i) mtu[i] += u1[i] + u2[i];
    const double eps_pri =
        std::sqrt(static_cast<double>(zdim)) * cfg.tol_abs + cfg.tol_rel * mxz;
    const double eps_dual = std::sqrt(static_cast<double>(xdim)) * cfg.tol_abs +
                            cfg.tol_rel * rho * norm2(mtu);

    diag.primal_residual = r_pri;
    diag.dual_residual = r_dual;
    if (r_pri <= eps_pri && r_dual <= eps_dual) {
      diag.converged = true;
      ++it;
      break;
    }

    if ((it + 1) % 50 == 0) {  // residual balancing keeps the factorization
      if (r_pri > 10.0 * r_dual) {
        rho *= 2.0;
        for (double& v : u0) v *= 0.5;
        for (double& v : u1) v *= 0.5;
        for (double& v : u2) v *= 0.5;
      } else if (r_dual > 10.0 * r_pri) {
        rho *= 0.5;
        for (double& v : u0) v *= 2.0;
        for (double& v : u1) v *= 2.0;
        for (double& v : u2) v *= 2.0;
      }
    }
  }
  diag.iterations = it;

  GroupSolveResult out;
  out.diagnostics = std::move(diag);
  out.solution.v.resize(p.patterns.size());
  out.solution.w.resize(p.patterns.size());
  for (std::size_t i = 0; i < p.patterns.size(); ++i) {
    out.solution.v[i] = cone_project(group_slice(z1, 2 * i), work.cone_rows[2 * i]);
    out.solution.w[i] = cone_project(group_slice(z1, 2 * i + 1), work.cone_rows[2 * i + 1]);
  }
  return out;
}

namespace {

double complex_lasso_objective(const ComplexMatrix& a, const CVector& y, double lambda,
                               const CVector& z) {
  CVector r = cmatvec(a, z);
  double fit = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) fit += std::norm(r[i] - y[i]);
  double pen = 0.0;
  for (const auto& c : z) pen += std::abs(c);
  return 0.5 * fit + lambda * pen;
}

}  // namespace

ComplexLassoResult fista_complex_lasso(const ComplexMatrix& a, const CVector& y, double lambda,
                                       const SolverConfig& cfg) {
  require(a.rows() == y.size(), "fista_complex_lasso: size mismatch");
  require(lambda >= 0.0, "fista_complex_lasso: negative penalty");
  const std::size_t k = a.cols();

  ComplexLassoResult out;
  const double sigma = power_sigma_max(a);
  if (sigma == 0.0) {
    out.z.assign(k, 0.0);
    out.diagnostics.converged = true;
    out.diagnostics.objective_trace.push_back(complex_lasso_objective(a, y, lambda, out.z));
    return out;
  }
  const double step = 1.0 / (sigma * sigma);
  const double tol = cfg.tol_abs * (1.0 + lambda);

  CVector x(k, 0.0), yk(k, 0.0);
  double t = 1.0;
  double fx = complex_lasso_objective(a, y, lambda, x);
  double best = fx;
  SolverDiagnostics diag;

  std::size_t it = 0;
  for (; it < cfg.max_iter; ++it) {
    CVector r = cmatvec(a, yk);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= y[i];
    CVector g = cmatHvec(a, r);

    CVector cand(k);
    const double tau = lambda * step;
    for (std::size_t j = 0; j < k; ++j) {
      const std::complex<double> c = yk[j] - step * g[j];
      const double mag = std::abs(c);
      cand[j] = mag <= tau ? std::complex<double>(0.0) : c * (1.0 - tau / mag);
    }
    const double f_cand = complex_lasso_objective(a, y, lambda, cand);

    CVector x_new;
    double f_new;
    // Accept candidates within one ulp of the current value; rejecting those
    // would freeze x at the sqrt(eps) accuracy floor of objective comparisons.
    const double slack = 4.4e-16 * (1.0 + std::abs(fx));
    if (f_cand <= fx + slack) {
      x_new = std::move(cand);
      f_new = f_cand;
      if (f_cand > fx) t = 1.0;
    } else {  // keep the better point, restart momentum
      x_new = x;
      f_new = fx;
      t = 1.0;
    }

    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    for (std::size_t j = 0; j < k; ++j)
      yk[j] = x_new[j] + ((t - 1.0) / t_new) * (x_new[j] - x[j]);
    x = std::move(x_new);
    fx = f_new;
    t = t_new;
    best = std::min(best, fx);
    diag.objective_trace.push_back(best);

    // Stationarity: subgradient residual of the current point.
    CVector rx = cmatvec(a, x);
    for (std::size_t i = 0; i < rx.size(); ++i) rx[i] -= y[i];
    CVector gx = cmatHvec(a, rx);
    double resid = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double mag = std::abs(x[j]);
      if (mag > 0.0)
        resid = std::max(resid, std::abs(gx[j] + lambda * (x[j] / mag)));
      else
        resid = std::max(resid, std::max(0.0, std::abs(gx[j]) - lambda));
    }
    if (resid <= tol) {
      diag.converged = true;
      ++it;
      break;
    }
  }
  diag.iterations = it;
  diag.primal_residual = 0.0;
  diag.dual_residual = 0.0;
  out.z = std::move(x);
  out.diagnostics = std::move(diag);
  return out;
}

Matrix svt(const Matrix& z, double tau) {
  require(tau >= 0.0, "svt: negative threshold");
  const SvdResult s = svd(z);
  Matrix out(z.rows(), z.cols());
  for (std::size_t j = 0; j < s.sigma.size(); ++j) {
    const double sv = s.sigma[j] - tau;
    if (sv <= 0.0) continue;
    for (std::size_t i = 0; i < z.rows(); ++i)
      for (std::size_t c = 0; c < z.cols(); ++c) out(i, c) += sv * s.u(i, j) * s.v(c, j);
  }
  return out;
}

namespace {

double nuclear_norm(const Matrix& z) {
  const SvdResult s = svd(z);
  double sum = 0.0;
  for (double v : s.sigma) sum += v;
  return sum;
}

Vector patches_fit(const std::vector<Matrix>& patches, const Matrix& z) {
  Vector fit(patches.front().rows(), 0.0);
  for (std::size_t k = 0; k < patches.size(); ++k) {
    const Vector zk = z.col(k);
    const Vector t = matvec(patches[k], zk);
    axpy(1.0, t, fit);
  }
  return fit;
}

}  // namespace

NuclearResult solve_nuclear(const std::vector<Matrix>& patches, const Vector& y, double beta,
                            const SolverConfig& cfg) {
  require(!patches.empty(), "solve_nuclear: no patches");
  require(beta > 0.0, "solve_nuclear: beta must be positive");
  const std::size_t n = patches.front().rows();
  const std::size_t df = patches.front().cols();
  const std::size_t kpos = patches.size();
  for (const Matrix& m : patches)
    require(m.rows() == n && m.cols() == df, "solve_nuclear: ragged patches");
  require(y.size() == n, "solve_nuclear: target size mismatch");

  Matrix stacked(n, df * kpos);
  for (std::size_t k = 0; k < kpos; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < df; ++j) stacked(i, k * df + j) = patches[k](i, j);
  const double sigma = power_sigma_max(stacked);
  SolverDiagnostics diag;
  if (sigma == 0.0) {
    NuclearResult out;
    out.z = Matrix(df, kpos);
    diag.converged = true;
    out.diagnostics = std::move(diag);
    return out;
  }
  const double step = 1.0 / (sigma * sigma);

  auto objective_at = [&](const Matrix& z) {
    const Vector fit = patches_fit(patches, z);
    return 0.5 * dot(sub(fit, y), sub(fit, y)) + beta * nuclear_norm(z);
  };

  Matrix x(df, kpos), yk(df, kpos);
  double t = 1.0;
  double fx = objective_at(x);
  double best = fx;

  std::size_t it = 0;
  for (; it < cfg.max_iter; ++it) {
    const Vector fit = patches_fit(patches, yk);
    const Vector r = sub(fit, y);
    Matrix grad(df, kpos);
    for (std::size_t k = 0; k < kpos; ++k) {
      const Vector gk = matTvec(patches[k], r);
      for (std::size_t j = 0; j < df; ++j) grad(j, k) = gk[j];
    }
    Matrix cand(df, kpos);
    for (std::size_t j = 0; j < df; ++j)
      for (std::size_t k = 0; k < kpos; ++k) cand(j, k) = yk(j, k) - step * grad(j, k);
    cand = svt(cand, beta * step);
    const double f_cand = objective_at(cand);

    Matrix x_new;
    double f_new;
    // Same one-ulp acceptance slack as the complex lasso loop: strict
    // monotone rejection pins x at the sqrt(eps) floor and the duality gap
    // with it.
    const double slack = 4.4e-16 * (1.0 + std::abs(fx));
    if (f_cand <= fx + slack) {
      x_new = std::move(cand);
      f_new = f_cand;
      if (f_cand > fx) t = 1.0;
    } else {
      x_new = x;
      f_new = fx;
      t = 1.0;
    }
    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    for (std::size_t j = 0; j < df; ++j)
      for (std::size_t k = 0; k < kpos; ++k)
        yk(j, k) = x_new(j, k) + ((t - 1.0) / t_new) * (x_new(j, k) - x(j, k));
    x = std::move(x_new);
    fx = f_new;
    t = t_new;
    best = std::min(best, fx);
    diag.objective_trace.push_back(best);

    if (it % 10 == 9 || it + 1 == cfg.max_iter) {
      // Duality gap at the scaled dual point c * (y - fit(x)).
      const Vector fit_x = patches_fit(patches, x);
      Vector vhat = sub(y, fit_x);
      Matrix dual_mat(df, kpos);
      for (std::size_t k = 0; k < kpos; ++k) {
        const Vector col = matTvec(patches[k], vhat);
        for (std::size_t j = 0; j < df; ++j) dual_mat(j, k) = col[j];
      }
      const SvdResult ds = svd(dual_mat);
      const double smax = ds.sigma.empty() ? 0.0 : ds.sigma.front();
      const double c = smax > beta ? beta / smax : 1.0;
      const double dual = c * dot(vhat, y) - 0.5 * c * c * dot(vhat, vhat);
      const double gap = fx - dual;
      if (gap <= std::max(cfg.tol_abs, cfg.tol_rel * (1.0 + std::abs(fx)))) {
        diag.converged = true;
        ++it;
        break;
      }
    }
  }
  diag.iterations = it;

  NuclearResult out;
  out.z = std::move(x);
  out.diagnostics = std::move(diag);
  return out;
}

}  // namespace convexnn
