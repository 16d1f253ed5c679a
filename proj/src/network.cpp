#include "convexnn/network.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace convexnn {

void validate(const TwoLayerReLUNet& net) {
    if (net.u.rows() != net.d || net.u.cols() != net.m) {
        throw std::invalid_argument("network: u must be d x m, got " +
                                    std::to_string(net.u.rows()) + " x " +
                                    std::to_string(net.u.cols()));
    }
    if (net.alpha.size() != net.m) {
        throw std::invalid_argument("network: alpha length " +
                                    std::to_string(net.alpha.size()) +
                                    " does not match m = " + std::to_string(net.m));
    }
    if (!all_finite(net.u.data()) || !all_finite(net.alpha)) {
        throw std::invalid_argument("network: non-finite weight");
    }
}

Vector predict(const TwoLayerReLUNet& net, const Matrix& x) {
    validate(net);
    if (x.cols() != net.d) {
        throw std::invalid_argument("predict: x has " + std::to_string(x.cols()) +
                                    " columns, network expects " + std::to_string(net.d));
    }
    Vector out(x.rows(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < net.m; ++j) {
            double t = 0.0;
            for (std::size_t k = 0; k < net.d; ++k) t += x(i, k) * net.u(k, j);
            if (t > 0.0) acc += net.alpha[j] * t;
        }
        out[i] = acc;
    }
    return out;
}

double nonconvex_cost(const TwoLayerReLUNet& net, const Matrix& x,
                      const Vector& y, double beta, LossKind loss) {
    Vector yhat = predict(net, x);
    double reg = 0.0;
    for (std::size_t j = 0; j < net.m; ++j) {
        double un = 0.0;
        for (std::size_t k = 0; k < net.d; ++k) un += net.u(k, j) * net.u(k, j);
        reg += un + net.alpha[j] * net.alpha[j];
    }
    return loss_value(loss, yhat, y) + 0.5 * beta * reg;
}

TwoLayerReLUNet reconstruct(const GroupSolution& s, const ArrangementSet& patterns) {
    if (s.v.empty() || s.v.size() != s.w.size()) {
        throw std::invalid_argument("reconstruct: empty or mismatched solution");
    }
    if (s.v.size() != patterns.patterns.size()) {
        throw std::invalid_argument("reconstruct: solution has " +
                                    std::to_string(s.v.size()) +
                                    " groups but pattern set has " +
                                    std::to_string(patterns.patterns.size()));
    }
    const std::size_t d = s.v.front().size();
    double max_norm = 0.0;
    for (std::size_t i = 0; i < s.v.size(); ++i) {
        max_norm = std::max(max_norm, norm2(s.v[i]));
        max_norm = std::max(max_norm, norm2(s.w[i]));
    }
    const double thresh = 1e-10 * max_norm;

    std::vector<Vector> cols;
    Vector alphas;
    for (std::size_t i = 0; i < s.v.size(); ++i) {
        double nv = norm2(s.v[i]);
        if (nv > thresh && nv > 0.0) {
            double r = std::sqrt(nv);
            cols.push_back(scaled(s.v[i], 1.0 / r));
            alphas.push_back(r);
        }
        double nw = norm2(s.w[i]);
        if (nw > thresh && nw > 0.0) {
            double r = std::sqrt(nw);
            cols.push_back(scaled(s.w[i], 1.0 / r));
            alphas.push_back(-r);
        }
    }

    TwoLayerReLUNet net;
    net.d = d;
    net.m = cols.size();
    net.u = Matrix(d, net.m);
    net.alpha = alphas;
    for (std::size_t j = 0; j < net.m; ++j)
        for (std::size_t k = 0; k < d; ++k) net.u(k, j) = cols[j][k];
    return net;
}

TwoLayerReLUNet merge_colinear(const TwoLayerReLUNet& net, double tol) {
    validate(net);
    if (tol < 0.0) throw std::invalid_argument("merge_colinear: tol must be >= 0");

    struct Bucket {
        Vector dir;   // unit direction of the first member
        Vector sum;   // accumulated |alpha_j| * u_j
        int sign;
    };
    std::vector<Bucket> buckets;
    std::vector<std::size_t> passthrough;

    for (std::size_t j = 0; j < net.m; ++j) {
        Vector uj = net.u.col(j);
        double un = norm2(uj);
        double aj = net.alpha[j];
        if (aj == 0.0 || un == 0.0) {
            passthrough.push_back(j);
            continue;
        }
        Vector dir = scaled(uj, 1.0 / un);
        Vector vj = scaled(uj, std::abs(aj));
        int sign = aj > 0.0 ? 1 : -1;
        bool merged = false;
        for (Bucket& b : buckets) {
            if (b.sign == sign && dot(b.dir, dir) >= 1.0 - tol) {
                axpy(1.0, vj, b.sum);
                merged = true;
                break;
            }
        }
        if (!merged) buckets.push_back({dir, vj, sign});
    }

    std::vector<Vector> cols;
    Vector alphas;
    for (const Bucket& b : buckets) {
        double s = norm2(b.sum);
        if (s == 0.0) continue;
        double r = std::sqrt(s);
        cols.push_back(scaled(b.sum, 1.0 / r));
        alphas.push_back(b.sign > 0 ? r : -r);
    }
    for (std::size_t j : passthrough) {
        cols.push_back(net.u.col(j));
        alphas.push_back(net.alpha[j]);
    }

    TwoLayerReLUNet out;
    out.d = net.d;
    out.m = cols.size();
    out.u = Matrix(net.d, out.m);
    out.alpha = alphas;
    for (std::size_t j = 0; j < out.m; ++j)
        for (std::size_t k = 0; k < net.d; ++k) out.u(k, j) = cols[j][k];
    return out;
}

TwoLayerReLUNet rescale_balanced(const TwoLayerReLUNet& net) {
    validate(net);
    TwoLayerReLUNet out = net;
    for (std::size_t j = 0; j < net.m; ++j) {
        double a = std::abs(net.alpha[j]);
        Vector uj = net.u.col(j);
        double r = norm2(uj);
        if (a == 0.0) {
            for (std::size_t k = 0; k < net.d; ++k) out.u(k, j) = 0.0;
            out.alpha[j] = 0.0;
            continue;
        }
        if (r == 0.0) {
            throw std::invalid_argument(
                "rescale_balanced: neuron " + std::to_string(j) +
                " has a zero hidden vector with nonzero output weight");
        }
        double g = std::sqrt(a / r);
        for (std::size_t k = 0; k < net.d; ++k) out.u(k, j) = g * uj[k];
        out.alpha[j] = net.alpha[j] / g;
    }
    return out;
}

double suboptimality_gap(const TwoLayerReLUNet& net,
                         const ConvexTrainingProblem& p,
                         const DualCertificate& cert) {
    if (!cert.valid) {
        throw std::invalid_argument(
            "suboptimality_gap: certificate is not dual-feasible; solve the "
            "convex program to tolerance first");
    }
    return nonconvex_cost(net, p.x, p.y, p.beta, p.loss) - cert.dual_value;
}

namespace {

std::vector<Vector> hidden_directions(const TwoLayerReLUNet& net) {
    validate(net);
    if (net.m == 0) {
        throw std::invalid_argument("pattern adapter: network has no neurons");
    }
    std::vector<Vector> dirs;
    dirs.reserve(net.m);
    for (std::size_t j = 0; j < net.m; ++j) dirs.push_back(net.u.col(j));
    return dirs;
}

}  // namespace

ArrangementSet harvest_patterns(const Matrix& x, const TwoLayerReLUNet& net) {
    return harvest_patterns(x, hidden_directions(net));
}

ArrangementSet adaptive_flip(const Matrix& x, const TwoLayerReLUNet& net,
                             double quantile) {
    return adaptive_flip(x, hidden_directions(net), quantile);
}

}  // namespace convexnn
