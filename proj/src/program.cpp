#include "convexnn/program.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "convexnn/rng.hpp"
#include "convexnn/solvers.hpp"

namespace convexnn {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

void validate(const ConvexTrainingProblem& p) {
  require(p.x.rows() >= 1 && p.x.cols() >= 1, "problem: empty data");
  require(p.y.size() == p.x.rows(), "problem: target size mismatch");
  require(all_finite(p.y), "problem: non-finite target");
  require(std::isfinite(p.beta) && p.beta > 0.0, "problem: beta must be positive");
  require(p.patterns.n == p.x.rows(), "problem: pattern length mismatch");
  require(p.patterns.patterns.size() >= 1, "problem: no patterns");
  for (const auto& pat : p.patterns.patterns)
    require(pat.mask.size() == p.x.rows(), "problem: pattern length mismatch");
  if (p.loss == LossKind::hinge)
    for (double v : p.y) require(v == 1.0 || v == -1.0, "problem: hinge labels must be +-1");
}

GroupSolution zero_solution(const ConvexTrainingProblem& p) {
  GroupSolution s;
  s.v.assign(p.patterns.size(), Vector(p.x.cols(), 0.0));
  s.w.assign(p.patterns.size(), Vector(p.x.cols(), 0.0));
  return s;
}

double loss_value(LossKind loss, const Vector& fit, const Vector& y) {
  require(fit.size() == y.size(), "loss_value: size mismatch");
  if (loss == LossKind::squared) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += (fit[i] - y[i]) * (fit[i] - y[i]);
    return 0.5 * s;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::max(0.0, 1.0 - y[i] * fit[i]);
  return s;
}

Vector fitted(const ConvexTrainingProblem& p, const GroupSolution& s) {
  require(s.v.size() == p.patterns.size() && s.w.size() == p.patterns.size(),
          "fitted: group count mismatch");
  Vector fit(p.x.rows(), 0.0);
  for (std::size_t g = 0; g < p.patterns.size(); ++g) {
    const auto& mask = p.patterns.patterns[g].mask;
    for (std::size_t i = 0; i < p.x.rows(); ++i) {
      if (!mask[i]) continue;
      double t = 0.0;
      for (std::size_t j = 0; j < p.x.cols(); ++j)
        t += p.x(i, j) * (s.v[g][j] - s.w[g][j]);
      fit[i] += t;
    }
  }
  return fit;
}

double group_norm_sum(const GroupSolution& s) {
  double sum = 0.0;
  for (const auto& v : s.v) sum += norm2(v);
  for (const auto& w : s.w) sum += norm2(w);
  return sum;
}

double objective(const ConvexTrainingProblem& p, const GroupSolution& s) {
  return loss_value(p.loss, fitted(p, s), p.y) + p.beta * group_norm_sum(s);
}

double cone_violation(const ConvexTrainingProblem& p, const GroupSolution& s) {
  double worst = 0.0;
  for (std::size_t g = 0; g < p.patterns.size(); ++g) {
    const auto& mask = p.patterns.patterns[g].mask;
    for (const Vector* t : {&s.v[g], &s.w[g]}) {
      for (std::size_t i = 0; i < p.x.rows(); ++i) {
        double xi_t = 0.0;
        for (std::size_t j = 0; j < p.x.cols(); ++j) xi_t += p.x(i, j) * (*t)[j];
        const double viol = mask[i] ? -xi_t : xi_t;  // (2D - I) x t >= 0
        worst = std::max(worst, viol);
      }
    }
  }
  return worst;
}

double solve_region_dual(const Matrix& x, const std::vector<bool>& mask, const Vector& v,
                         double tol) {
  require(mask.size() == x.rows(), "solve_region_dual: mask size mismatch");
  require(v.size() == x.rows(), "solve_region_dual: v size mismatch");
  const std::size_t n = x.rows(), d = x.cols();

  // Nonzero columns of [x^T D | x^T (D - I)] are the signed data rows, so the
  // least-squares dual reduces to min_{t >= 0} || m t + x^T D v ||.
  Matrix m(d, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = mask[i] ? 1.0 : -1.0;
    for (std::size_t j = 0; j < d; ++j) m(j, i) = s * x(i, j);
  }
  Vector c(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    for (std::size_t j = 0; j < d; ++j) c[j] += x(i, j) * v[i];
  }
  const Vector t = nnls(m, scaled(c, -1.0), tol);
  Vector resid = c;
  for (std::size_t i = 0; i < n; ++i) {
    if (t[i] == 0.0) continue;
    for (std::size_t j = 0; j < d; ++j) resid[j] += m(j, i) * t[i];
  }
  return norm2(resid);
}

namespace {

double relu_probe_value(const Matrix& x, const Vector& v_hat, const Vector& u) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double t = dot(x.row(i), u);
    if (t > 0.0) s += v_hat[i] * t;
  }
  return std::abs(s);
}

// Dual objective -loss*(-v): the Fenchel dual data term of the fit.
double dual_objective(LossKind loss, const Vector& y, const Vector& v) {
  if (loss == LossKind::squared) return dot(v, y) - 0.5 * dot(v, v);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * v[i];
  return s;
}

}  // namespace

DualCertificate dual_certificate(const ConvexTrainingProblem& p, const GroupSolution& s,
                                 std::size_t probe_count, std::uint64_t seed) {
  validate(p);
  const Vector fit = fitted(p, s);
  const double primal = loss_value(p.loss, fit, p.y) + p.beta * group_norm_sum(s);

  DualCertificate cert;
  cert.v_hat.resize(p.y.size());
  if (p.loss == LossKind::squared) {
    for (std::size_t i = 0; i < p.y.size(); ++i) cert.v_hat[i] = p.y[i] - fit[i];
  } else {
    // Hinge multipliers t in [0, 1], v_hat = diag(y) t. Margins clear of the
    // kink force t (1 below, 0 above). Samples sitting at the kink are
    // underdetermined by the primal alone, so their t comes from the
    // stationarity of the active groups, x^T D_g diag(y) t = +-beta g/||g||,
    // solved jointly by least squares and clipped back to the box.
    const double band = 1e-5;
    const std::size_t n = p.y.size();
    const std::size_t d = p.x.cols();
    Vector t(n, 1.0);
    std::vector<std::size_t> free_idx;
    for (std::size_t i = 0; i < n; ++i) {
      const double m = p.y[i] * fit[i];
      if (m > 1.0 + band)
        t[i] = 0.0;
      else if (m >= 1.0 - band)
        free_idx.push_back(i);
    }
    if (!free_idx.empty()) {
      double max_norm = 0.0;
      for (const auto& grp : {&s.v, &s.w})
        for (const Vector& g : *grp) max_norm = std::max(max_norm, norm2(g));
      const double active_tol = 1e-8 * std::max(1.0, max_norm);

      std::vector<Vector> rows;
      std::vector<double> rhs;
      auto add_group_rows = [&](const std::vector<Vector>& groups, double sign) {
        for (std::size_t gi = 0; gi < groups.size(); ++gi) {
          const double gn = norm2(groups[gi]);
          if (gn <= active_tol) continue;
          const auto& mask = p.patterns.patterns[gi].mask;
          for (std::size_t a = 0; a < d; ++a) {
            Vector row(free_idx.size(), 0.0);
            double b = sign * p.beta * groups[gi][a] / gn;
            for (std::size_t i = 0; i < n; ++i) {
              if (!mask[i]) continue;
              const double coef = p.x(i, a) * p.y[i];
              bool is_free = false;
              for (std::size_t f = 0; f < free_idx.size(); ++f) {
                if (free_idx[f] == i) {
                  row[f] = coef;
                  is_free = true;
                  break;
                }
              }
              if (!is_free) b -= coef * t[i];
            }
            rows.push_back(std::move(row));
            rhs.push_back(b);
          }
        }
      };
      add_group_rows(s.v, 1.0);
      add_group_rows(s.w, -1.0);
      if (!rows.empty()) {
        Matrix a_mat(rows.size(), free_idx.size());
        Vector b_vec(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
          a_mat.set_row(r, rows[r]);
          b_vec[r] = rhs[r];
        }
        const Vector sol = least_squares(a_mat, b_vec);
        for (std::size_t f = 0; f < free_idx.size(); ++f)
          t[free_idx[f]] = std::min(1.0, std::max(0.0, sol[f]));
      }
    }
    for (std::size_t i = 0; i < n; ++i) cert.v_hat[i] = p.y[i] * t[i];
  }

  double mu = 0.0;
  const Vector neg_v = scaled(cert.v_hat, -1.0);
  for (const auto& pat : p.patterns.patterns) {
    mu = std::max(mu, solve_region_dual(p.x, pat.mask, cert.v_hat));
    mu = std::max(mu, solve_region_dual(p.x, pat.mask, neg_v));
  }
  GaussianStream gs(seed);
  std::vector<Vector> probes;
  probes.reserve(probe_count + p.patterns.size() + 2 * p.patterns.size());
  for (std::size_t c = 0; c < probe_count; ++c) probes.push_back(gs.next_vec(p.x.cols()));
  for (const Vector& w : p.patterns.witnesses) probes.push_back(w);
  for (const auto& grp : {&s.v, &s.w})
    for (const Vector& g : *grp) probes.push_back(g);
  for (Vector& u : probes) {
    const double nu = norm2(u);
    if (nu == 0.0) continue;
    for (double& v : u) v /= nu;
    mu = std::max(mu, relu_probe_value(p.x, cert.v_hat, u));
  }

  cert.max_dual_constraint = mu;
  cert.max_constraint_violation = std::max(0.0, mu - p.beta);
  cert.valid = mu <= p.beta * (1.0 + 1e-6);

  const double c = (mu > p.beta && mu > 0.0) ? p.beta / mu : 1.0;
  const Vector v_scaled = scaled(cert.v_hat, c);
  cert.dual_value = dual_objective(p.loss, p.y, v_scaled);
  cert.certified_gap = primal - cert.dual_value;
  return cert;
}

double gauge_value(const Matrix& x, const Vector& y, double beta_small,
                   const SolverConfig& cfg) {
  require(x.rows() == y.size(), "gauge_value: size mismatch");
  const double beta = beta_small > 0.0 ? beta_small : 1e-4 * std::max(norm2(y), 1.0);
  ConvexTrainingProblem prob;
  prob.x = x;
  prob.y = y;
  prob.beta = beta;
  prob.patterns = enumerate_exact(x);
  prob.loss = LossKind::squared;
  const GroupSolveResult res = solve_group_cone(prob, cfg);
  return group_norm_sum(res.solution);
}

double polar_support(const Matrix& x, const Vector& y, std::size_t sample_count,
                     std::uint64_t seed) {
  require(x.rows() >= 1 && x.cols() >= 1, "polar_support: empty data");
  require(y.size() == x.rows(), "polar_support: size mismatch");
  require(sample_count >= 1, "polar_support: need at least one sample");
  const std::size_t n = x.rows(), d = x.cols();

  // Direction set: exhaustive for d = 1, dense angular grid for d = 2,
  // seeded Gaussian sphere samples otherwise.
  std::vector<Vector> dirs;
  if (d == 1) {
    dirs.push_back({1.0});
    dirs.push_back({-1.0});
  } else if (d == 2) {
    const double two_pi = 6.283185307179586476925286766559;
    for (std::size_t k = 0; k < sample_count; ++k) {
      const double a = two_pi * static_cast<double>(k) / static_cast<double>(sample_count);
      dirs.push_back({std::cos(a), std::sin(a)});
    }
  } else {
    GaussianStream gs(seed);
    for (std::size_t k = 0; k < sample_count; ++k) {
      Vector u = gs.next_vec(d);
      const double nu = norm2(u);
      if (nu == 0.0) continue;
      for (double& v : u) v /= nu;
      dirs.push_back(std::move(u));
    }
  }

  // Atoms (x u)_+ define the slab constraints |atom^T z| <= 1.
  std::vector<Vector> atoms;
  for (const Vector& u : dirs) {
    Vector a(n, 0.0);
    bool nonzero = false;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = dot(x.row(i), u);
      if (t > 0.0) {
        a[i] = t;
        nonzero = true;
      }
    }
    if (nonzero) atoms.push_back(std::move(a));
  }
  if (atoms.empty()) return 0.0;  // no constraints hit: support over {0} only

  Matrix a_mat(atoms.size(), n);
  for (std::size_t s = 0; s < atoms.size(); ++s) a_mat.set_row(s, atoms[s]);

  const double sigma = power_sigma_max(a_mat);
  const double rho = 1.0 / std::max(1e-12, sigma * sigma);
  Matrix k_mat(n, n);
  for (std::size_t s = 0; s < atoms.size(); ++s)
    for (std::size_t i = 0; i < n; ++i) {
      const double ai = atoms[s][i];
      if (ai == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) k_mat(i, j) += rho * ai * atoms[s][j];
    }
  const double delta = 1e-8;
  for (std::size_t i = 0; i < n; ++i) k_mat(i, i) += delta;
  const Cholesky fac = Cholesky::factor(k_mat);

  const std::size_t rows = a_mat.rows();
  Vector z(n, 0.0), w(rows, 0.0), u_dual(rows, 0.0);
  const double cap = 1e8 * (1.0 + norm2(y));
  double value_prev = 0.0;
  for (std::size_t it = 0; it < 50000; ++it) {
    Vector rhs = y;
    Vector wu(rows);
    for (std::size_t s = 0; s < rows; ++s) wu[s] = w[s] - u_dual[s];
    const Vector atwu = matTvec(a_mat, wu);
    for (std::size_t i = 0; i < n; ++i) rhs[i] += rho * atwu[i];
    z = fac.solve(rhs);

    const Vector az = matvec(a_mat, z);
    double r_pri = 0.0;
    for (std::size_t s = 0; s < rows; ++s) {
      const double c = az[s] + u_dual[s];
      const double w_new = std::min(1.0, std::max(-1.0, c));
      r_pri = std::max(r_pri, std::abs(az[s] - w_new));
      u_dual[s] += az[s] - w_new;
      w[s] = w_new;
    }
    if (norm2(z) > cap) break;
    if (it % 20 == 19) {
      const double val = dot(y, z);
      if (r_pri <= 1e-9 * (1.0 + inf_norm(az)) &&
          std::abs(val - value_prev) <= 1e-10 * (1.0 + std::abs(val)))
        break;
      value_prev = val;
    }
  }

  // Report the value at a strictly feasible rescaling of the iterate.
  const Vector az = matvec(a_mat, z);
  const double scale = std::max(1.0, inf_norm(az));
  return dot(y, z) / scale;
}

}  // namespace convexnn
