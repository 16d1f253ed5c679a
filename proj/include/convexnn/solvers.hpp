#pragma once

#include "convexnn/numerics.hpp"
#include "convexnn/program.hpp"
#include "convexnn/solver_config.hpp"

namespace convexnn {

/// Euclidean projection onto {t : a t >= 0} by Moreau decomposition: the
/// polar-cone part is -a^T lambda with lambda >= 0 minimizing ||x + a^T l||
/// (one NNLS pass), so proj = x + a^T lambda. Exact up to the NNLS tolerance.
Vector cone_project(const Vector& x, const Matrix& a);

/// Block soft threshold: 0 when ||g|| <= tau, else (1 - tau/||g||) g.
Vector group_soft_threshold(const Vector& g, double tau);

struct GroupSolveResult {
  GroupSolution solution;
  SolverDiagnostics diagnostics;
};

/// Consensus ADMM for the cone-constrained group program. The returned
/// solution is extracted by projecting each soft-thresholded consensus block
/// onto its cone, so it is exactly feasible, and groups the shrink step
/// zeroes stay exactly zero. Deterministic for a fixed problem and config.
GroupSolveResult solve_group_cone(const ConvexTrainingProblem& p, const SolverConfig& cfg);

struct ComplexLassoResult {
  CVector z;
  SolverDiagnostics diagnostics;
};

/// min over complex z of 0.5 ||a z - y||^2 + lambda sum_k |z_k|, by FISTA
/// with function-value restarts; the recorded objective trace is the
/// nonincreasing running best. Stops when every coordinate's subgradient
/// residual falls below tol_abs * (1 + lambda).
ComplexLassoResult fista_complex_lasso(const ComplexMatrix& a, const CVector& y, double lambda,
                                       const SolverConfig& cfg);

/// Singular value thresholding: u max(s - tau, 0) v^T.
Matrix svt(const Matrix& z, double tau);

struct NuclearResult {
  Matrix z;  // filter_dim x K, one column of coefficients per patch position
  SolverDiagnostics diagnostics;
};

/// min over Z of 0.5 || sum_k x_k z_k - y ||^2 + beta ||Z||_*, by proximal
/// gradient with momentum and function-value restarts; the recorded
/// objective trace is the nonincreasing running best. Converged means the
/// duality gap at the scaled residual dual point fell below
/// max(tol_abs, tol_rel * (1 + objective)).
NuclearResult solve_nuclear(const std::vector<Matrix>& patches, const Vector& y, double beta,
                            const SolverConfig& cfg);

}  // namespace convexnn
