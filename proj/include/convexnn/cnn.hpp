#pragma once

#include "convexnn/solvers.hpp"

namespace convexnn {

// K patch matrices, one per spatial position, each n x d with
// d = filter_h * filter_w * channels.
struct PatchSet {
    std::vector<Matrix> patches;
};

void validate(const PatchSet& ps);

// Circular convolution geometry: length-h filters zero-padded into R^d and
// applied by cyclic shifts.  penalty_scale multiplies beta to form the
// frequency-domain l1 weight; <= 0 selects the default 1/sqrt(d), the
// constant under the unnormalized-forward/1 over d-inverse transform used
// throughout.
struct CirculantSpec {
    std::size_t filter_len = 0;
    std::size_t signal_len = 0;
    double penalty_scale = 0.0;
};

// Rows of `images` are flattened channel-major: pixel (c, r, col) lives at
// index c*height*width + r*width + col.  Every filter placement must land
// exactly (no partial windows); violations name the expected geometry.
PatchSet extract_patches(const Matrix& images, std::size_t height, std::size_t width,
                         std::size_t channels, std::size_t filter_h, std::size_t filter_w,
                         std::size_t stride);

// Vertical stacking ([x_1; ...; x_K], [y_1; ...; y_K]): feeding the result
// to the fully connected pipeline solves the per-position separable problem,
// since the squared loss splits over blocks.
std::pair<Matrix, Vector> stack_separable(const PatchSet& ps,
                                          const std::vector<Vector>& y_blocks);

struct LinearCnnResult {
    Matrix z;  // d x K filter coefficients, column k for patch k
    SolverDiagnostics diagnostics;
    // sigma_max([x_1^T r ... x_K^T r]) at the residual r = y - fit; at the
    // optimum this is <= beta * (1 + 1e-6).
    double sdp_check = 0.0;
};

// Nuclear-norm training of the linear CNN.
LinearCnnResult train_linear_cnn(const PatchSet& ps, const Vector& y, double beta,
                                 const SolverConfig& cfg);

// x times the DFT matrix (unnormalized forward), computed row-wise.
ComplexMatrix circulant_features(const Matrix& x, const CirculantSpec& spec);

struct CircularCnnResult {
    CVector z;
    double value = 0.0;
    SolverDiagnostics diagnostics;
};

// Frequency-domain training of the circular linear CNN: complex lasso on
// circulant_features(x) with penalty beta * penalty_scale.  `value` is the
// optimal objective at that penalty.
CircularCnnResult train_circular_cnn(const Matrix& x, const Vector& y, double beta,
                                     const CirculantSpec& spec, const SolverConfig& cfg);

// Diagnostic only: the time-domain weight vector w with x_tilde z = x w,
// i.e. w = F z; the imaginary part is reported so callers can confirm it
// vanishes for conjugate-symmetric z.
std::pair<Vector, Vector> time_domain_weights(const CVector& z);

}  // namespace convexnn
