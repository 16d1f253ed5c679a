#include "convexnn/cnn.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace convexnn {

void validate(const PatchSet& ps) {
    if (ps.patches.empty()) throw std::invalid_argument("patch set: no patches");
    const std::size_t n = ps.patches.front().rows();
    const std::size_t d = ps.patches.front().cols();
    if (n == 0 || d == 0) throw std::invalid_argument("patch set: empty patch matrix");
    for (std::size_t k = 1; k < ps.patches.size(); ++k) {
        if (ps.patches[k].rows() != n || ps.patches[k].cols() != d) {
            throw std::invalid_argument(
                "patch set: patch " + std::to_string(k) + " is " +
                std::to_string(ps.patches[k].rows()) + " x " +
                std::to_string(ps.patches[k].cols()) + ", expected " +
                std::to_string(n) + " x " + std::to_string(d));
        }
    }
}

PatchSet extract_patches(const Matrix& images, std::size_t height, std::size_t width,
                         std::size_t channels, std::size_t filter_h, std::size_t filter_w,
                         std::size_t stride) {
    if (height == 0 || width == 0 || channels == 0 || filter_h == 0 || filter_w == 0 ||
        stride == 0) {
        throw std::invalid_argument("extract_patches: geometry values must be >= 1");
    }
    if (filter_h > height || filter_w > width) {
        throw std::invalid_argument("extract_patches: filter " + std::to_string(filter_h) +
                                    "x" + std::to_string(filter_w) + " exceeds image " +
                                    std::to_string(height) + "x" + std::to_string(width));
    }
    if ((height - filter_h) % stride != 0 || (width - filter_w) % stride != 0) {
        throw std::invalid_argument(
            "extract_patches: stride " + std::to_string(stride) +
            " leaves a partial window (height - filter_h = " +
            std::to_string(height - filter_h) + ", width - filter_w = " +
            std::to_string(width - filter_w) + " must both be multiples of it)");
    }
    const std::size_t expected_cols = channels * height * width;
    if (images.cols() != expected_cols) {
        throw std::invalid_argument("extract_patches: images have " +
                                    std::to_string(images.cols()) + " columns, expected " +
                                    std::to_string(expected_cols) + " (= channels*height*width)");
    }
    const std::size_t kh = (height - filter_h) / stride + 1;
    const std::size_t kw = (width - filter_w) / stride + 1;
    const std::size_t n = images.rows();
    const std::size_t d = channels * filter_h * filter_w;

    PatchSet ps;
    ps.patches.reserve(kh * kw);
    for (std::size_t pr = 0; pr < kh; ++pr) {
        for (std::size_t pc = 0; pc < kw; ++pc) {
            Matrix xk(n, d);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t c = 0; c < channels; ++c) {
                    for (std::size_t a = 0; a < filter_h; ++a) {
                        for (std::size_t b = 0; b < filter_w; ++b) {
                            const std::size_t src =
                                c * height * width + (pr * stride + a) * width + (pc * stride + b);
                            xk(i, c * filter_h * filter_w + a * filter_w + b) = images(i, src);
                        }
                    }
                }
            }
            ps.patches.push_back(std::move(xk));
        }
    }
    return ps;
}

std::pair<Matrix, Vector> stack_separable(const PatchSet& ps,
                                          const std::vector<Vector>& y_blocks) {
    validate(ps);
    if (y_blocks.size() != ps.patches.size()) {
        throw std::invalid_argument("stack_separable: " + std::to_string(y_blocks.size()) +
                                    " label blocks for " + std::to_string(ps.patches.size()) +
                                    " patches");
    }
    const std::size_t n = ps.patches.front().rows();
    const std::size_t d = ps.patches.front().cols();
    for (std::size_t k = 0; k < y_blocks.size(); ++k) {
        if (y_blocks[k].size() != n) {
            throw std::invalid_argument("stack_separable: block " + std::to_string(k) +
                                        " has length " + std::to_string(y_blocks[k].size()) +
                                        ", expected " + std::to_string(n));
        }
    }
    Matrix big(n * ps.patches.size(), d);
    Vector labels(n * ps.patches.size());
    for (std::size_t k = 0; k < ps.patches.size(); ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) big(k * n + i, j) = ps.patches[k](i, j);
            labels[k * n + i] = y_blocks[k][i];
        }
    }
    return {std::move(big), std::move(labels)};
}

LinearCnnResult train_linear_cnn(const PatchSet& ps, const Vector& y, double beta,
                                 const SolverConfig& cfg) {
    validate(ps);
    if (ps.patches.front().rows() != y.size()) {
        throw std::invalid_argument("train_linear_cnn: y length " + std::to_string(y.size()) +
                                    " does not match patch rows " +
                                    std::to_string(ps.patches.front().rows()));
    }
    if (!(beta > 0.0)) throw std::invalid_argument("train_linear_cnn: beta must be > 0");

    NuclearResult nr = solve_nuclear(ps.patches, y, beta, cfg);

    Vector residual = y;
    for (std::size_t k = 0; k < ps.patches.size(); ++k) {
        Vector fit = matvec(ps.patches[k], nr.z.col(k));
        axpy(-1.0, fit, residual);
    }
    const std::size_t d = ps.patches.front().cols();
    Matrix stacked(d, ps.patches.size());
    for (std::size_t k = 0; k < ps.patches.size(); ++k) {
        Vector col = matTvec(ps.patches[k], residual);
        stacked.set_col(k, col);
    }

    LinearCnnResult out;
    out.z = std::move(nr.z);
    out.diagnostics = std::move(nr.diagnostics);
    out.sdp_check = frob_norm(stacked) == 0.0 ? 0.0 : power_sigma_max(stacked);
    return out;
}

namespace {

void check_circulant(const Matrix& x, const CirculantSpec& spec) {
    if (spec.signal_len == 0 || spec.filter_len == 0) {
        throw std::invalid_argument("circulant spec: lengths must be >= 1");
    }
    if (spec.filter_len > spec.signal_len) {
        throw std::invalid_argument("circulant spec: filter length " +
                                    std::to_string(spec.filter_len) + " exceeds signal length " +
                                    std::to_string(spec.signal_len));
    }
    if (x.cols() != spec.signal_len) {
        throw std::invalid_argument("circulant: x has " + std::to_string(x.cols()) +
                                    " columns, spec expects " + std::to_string(spec.signal_len));
    }
}

}  // namespace

ComplexMatrix circulant_features(const Matrix& x, const CirculantSpec& spec) {
    check_circulant(x, spec);
    return dft_rows(x);
}

CircularCnnResult train_circular_cnn(const Matrix& x, const Vector& y, double beta,
                                     const CirculantSpec& spec, const SolverConfig& cfg) {
    check_circulant(x, spec);
    if (x.rows() != y.size()) {
        throw std::invalid_argument("train_circular_cnn: y length " + std::to_string(y.size()) +
                                    " does not match x rows " + std::to_string(x.rows()));
    }
    if (!(beta > 0.0)) throw std::invalid_argument("train_circular_cnn: beta must be > 0");

    const double scale =
        spec.penalty_scale > 0.0 ? spec.penalty_scale : 1.0 / std::sqrt(double(spec.signal_len));
    const double lambda = beta * scale;

    ComplexMatrix feats = circulant_features(x, spec);
    CVector cy(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) cy[i] = y[i];

    ComplexLassoResult lr = fista_complex_lasso(feats, cy, lambda, cfg);

    CVector fit = cmatvec(feats, lr.z);
    double quad = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) quad += std::norm(fit[i] - cy[i]);
    double l1 = 0.0;
    for (const auto& zk : lr.z) l1 += std::abs(zk);

    CircularCnnResult out;
    out.z = std::move(lr.z);
    out.value = 0.5 * quad + lambda * l1;
    out.diagnostics = std::move(lr.diagnostics);
    return out;
}

std::pair<Vector, Vector> time_domain_weights(const CVector& z) {
    CVector w = fft(z);
    Vector re(w.size()), im(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        re[i] = w[i].real();
        im[i] = w[i].imag();
    }
    return {std::move(re), std::move(im)};
}

}  // namespace convexnn
