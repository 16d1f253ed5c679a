#pragma once

#include "convexnn/arrangements.hpp"
#include "convexnn/program.hpp"

namespace convexnn {

// Two-layer ReLU network f(x) = sum_j alpha_j * max(0, x^T u_j).
// u holds the hidden weights as columns (d x m); alpha has length m.
struct TwoLayerReLUNet {
    std::size_t d = 0;
    std::size_t m = 0;
    Matrix u;
    Vector alpha;
};

// Throws std::invalid_argument unless u is d x m, alpha has length m,
// and every entry is finite.
void validate(const TwoLayerReLUNet& net);

// Returns the length-n vector of network outputs on the rows of x.
Vector predict(const TwoLayerReLUNet& net, const Matrix& x);

// loss(predict(net, x), y) + beta/2 * sum_j (|u_j|^2 + alpha_j^2).
double nonconvex_cost(const TwoLayerReLUNet& net, const Matrix& x,
                      const Vector& y, double beta, LossKind loss);

// Builds the network whose cost matches the group objective: each group i
// with |v_i| above threshold emits (v_i/sqrt|v_i|, +sqrt|v_i|), each
// nonzero w_i emits (w_i/sqrt|w_i|, -sqrt|w_i|).  Groups below
// 1e-10 * max group norm are treated as zero.  The emitted neuron count
// is the network's m.
TwoLayerReLUNet reconstruct(const GroupSolution& s, const ArrangementSet& patterns);

// Merges positively colinear hidden neurons (cosine >= 1 - tol between
// normalized directions, same output-weight sign) by summing their
// alpha-absorbed vectors alpha_j * u_j and re-balancing.  Predictions are
// preserved exactly up to roundoff; neurons with alpha = 0 or u_j = 0
// pass through untouched.
TwoLayerReLUNet merge_colinear(const TwoLayerReLUNet& net, double tol = 1e-9);

// Per-neuron rescaling (u_j, alpha_j) -> (g u_j, alpha_j / g) with
// g = sqrt(|alpha_j| / |u_j|), after which |u_j| = |alpha_j| and the
// quadratic penalty collapses to beta * sum_j |alpha_j| * |u_j|.
// Predictions never change and the cost never increases.  Neurons with
// alpha = 0 become zero neurons; a zero hidden vector with nonzero alpha
// is rejected because no rescaling can balance it.
TwoLayerReLUNet rescale_balanced(const TwoLayerReLUNet& net);

// nonconvex_cost(net) minus the certificate's dual lower bound.
// Nonnegative (within 1e-9) whenever the certificate is valid; throws
// std::invalid_argument for an invalid certificate since the bound is
// meaningless before a converged solve.
double suboptimality_gap(const TwoLayerReLUNet& net,
                         const ConvexTrainingProblem& p,
                         const DualCertificate& cert);

// Pattern-source adapters: use the network's hidden weights as probe
// directions.
ArrangementSet harvest_patterns(const Matrix& x, const TwoLayerReLUNet& net);
ArrangementSet adaptive_flip(const Matrix& x, const TwoLayerReLUNet& net,
                             double quantile);

}  // namespace convexnn
