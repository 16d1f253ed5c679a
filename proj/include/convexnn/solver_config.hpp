#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace convexnn {

struct SolverConfig {
  double rho = 1.0;          // ADMM penalty (adapted online by residual balancing)
  double tol_abs = 1e-9;
  double tol_rel = 1e-9;
  std::size_t max_iter = 200000;  // small problems need ~1e5 iterations at 1e-9
  std::uint64_t seed = 0;
};

struct SolverDiagnostics {
  std::size_t iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  std::vector<double> objective_trace;  // objective per recorded iteration
  bool converged = false;
};

}  // namespace convexnn
