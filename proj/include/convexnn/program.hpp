#pragma once

#include <cstdint>

#include "convexnn/arrangements.hpp"
#include "convexnn/numerics.hpp"
#include "convexnn/solver_config.hpp"

namespace convexnn {

enum class LossKind { squared, hinge };

/// The finite convex training program: one (v_i, w_i) pair of weight vectors
/// per activation pattern, fit = sum_i D_i x (v_i - w_i), group-norm penalty
/// beta * sum_i (||v_i|| + ||w_i||), and the sign constraints
/// (2 D_i - I) x v_i >= 0, (2 D_i - I) x w_i >= 0.
struct ConvexTrainingProblem {
  Matrix x;                 // n x d data
  Vector y;                 // n targets (labels in {-1,+1} for hinge)
  double beta = 0.0;        // group penalty, > 0
  ArrangementSet patterns;  // activation masks defining the groups
  LossKind loss = LossKind::squared;
};

/// Throws std::invalid_argument on shape/finiteness/label violations.
void validate(const ConvexTrainingProblem& p);

/// Group weights aligned with the problem's patterns; each vector length d.
struct GroupSolution {
  std::vector<Vector> v;
  std::vector<Vector> w;
};

GroupSolution zero_solution(const ConvexTrainingProblem& p);

/// Data-fit term of the loss at a prediction vector.
double loss_value(LossKind loss, const Vector& fit, const Vector& y);

/// fit = sum_i D_i x (v_i - w_i).
Vector fitted(const ConvexTrainingProblem& p, const GroupSolution& s);

double group_norm_sum(const GroupSolution& s);

double objective(const ConvexTrainingProblem& p, const GroupSolution& s);

/// Largest violation of the sign constraints across all groups (0 when the
/// solution is feasible).
double cone_violation(const ConvexTrainingProblem& p, const GroupSolution& s);

/// max { v^T D x u : ||u|| <= 1, (2D - I) x u >= 0 } for the region given by
/// `mask`, computed exactly through its least-squares dual
/// min_{a,b >= 0} || x^T D (v + a + b) - x^T b || (one NNLS pass).
double solve_region_dual(const Matrix& x, const std::vector<bool>& mask, const Vector& v,
                         double tol = -1.0);

struct DualCertificate {
  Vector v_hat;                    // candidate dual point (y - fit for squared loss)
  double dual_value = 0.0;         // dual objective at the feasibility-scaled point
  double certified_gap = 0.0;      // objective(s) - dual_value; >= -1e-9 by construction
  double max_dual_constraint = 0.0;       // mu = max |v_hat^T (x u)_+| observed
  double max_constraint_violation = 0.0;  // max(0, mu - beta)
  bool valid = false;              // mu <= beta * (1 + 1e-6)
};

/// Exact dual constraint check over every pattern in the problem plus
/// `probe_count` random directions, the pattern witnesses, and the
/// (normalized) nonzero solution groups. The certified gap is evaluated at
/// v_hat * min(1, beta/mu), which is feasible for all probed constraints, so
/// it is a sound optimality bound whenever the pattern set is complete.
/// Squared loss gives a tight bound at the optimum. Hinge loss rebuilds the
/// kink multipliers from active-group stationarity; the bound stays sound
/// but can be loose when every margin sits at the kink and the groups lie on
/// their cone faces, which leaves the multipliers underdetermined.
DualCertificate dual_certificate(const ConvexTrainingProblem& p, const GroupSolution& s,
                                 std::size_t probe_count = 64, std::uint64_t seed = 0);

/// Minimum total group norm reproducing y, approximated by the convex program
/// at a small penalty over the exactly enumerated patterns. beta_small <= 0
/// picks 1e-4 * max(||y||, 1).
double gauge_value(const Matrix& x, const Vector& y, double beta_small = 0.0,
                   const SolverConfig& cfg = {});

/// Support value max { y^T z : |z^T (x u)_+| <= 1 for sampled unit u }.
/// The sampled constraint set relaxes the true one, so the value upper-bounds
/// the exact support; directions are a dense deterministic grid for d <= 2
/// and seeded Gaussian draws otherwise. Growth past 1e8 * scale is reported
/// as the capped current value (the sampled program can be unbounded).
double polar_support(const Matrix& x, const Vector& y, std::size_t sample_count,
                     std::uint64_t seed);

}  // namespace convexnn
