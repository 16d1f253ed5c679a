#include "convexnn/baseline.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "convexnn/rng.hpp"

namespace convexnn {

TwoLayerReLUNet init_gaussian(std::size_t d, std::size_t m, std::uint64_t seed,
                              double scale) {
    if (d == 0 || m == 0) throw std::invalid_argument("init_gaussian: d and m must be >= 1");
    if (!(scale > 0.0)) throw std::invalid_argument("init_gaussian: scale must be > 0");
    GaussianStream rng(seed);
    TwoLayerReLUNet net;
    net.d = d;
    net.m = m;
    net.u = Matrix(d, m);
    net.alpha = Vector(m, 0.0);
    for (std::size_t k = 0; k < d; ++k)
        for (std::size_t j = 0; j < m; ++j) net.u(k, j) = scale * rng.next();
    for (std::size_t j = 0; j < m; ++j) net.alpha[j] = scale * rng.next();
    return net;
}

namespace {

// d(loss)/d(yhat_i) for one sample.  Hinge uses the kink convention of
// relu_subgradient: zero slope exactly at margin 1.
double loss_slope(LossKind loss, double yhat, double y) {
    if (loss == LossKind::squared) return yhat - y;
    return relu_subgradient(1.0 - y * yhat) * (-y);
}

}  // namespace

SgdResult train_sgd(const Matrix& x, const Vector& y, const TrainConfig& cfg) {
    if (x.rows() == 0 || x.cols() == 0) throw std::invalid_argument("train_sgd: empty data");
    if (x.rows() != y.size()) {
        throw std::invalid_argument("train_sgd: x has " + std::to_string(x.rows()) +
                                    " rows but y has " + std::to_string(y.size()));
    }
    if (cfg.m == 0) throw std::invalid_argument("train_sgd: m must be >= 1");
    if (!(cfg.learning_rate >= 0.0)) throw std::invalid_argument("train_sgd: negative learning rate");
    if (cfg.beta < 0.0) throw std::invalid_argument("train_sgd: negative beta");

    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    const std::size_t m = cfg.m;
    const std::size_t batch = std::min(std::max<std::size_t>(cfg.batch_size, 1), n);
    const double scale = cfg.init_scale > 0.0 ? cfg.init_scale : 1.0 / std::sqrt(double(m));

    SgdResult res;
    res.net = init_gaussian(d, m, cfg.seed, scale);
    TwoLayerReLUNet& net = res.net;

    // Separate stream for the shuffle schedule so the initial weights match
    // init_gaussian(cfg.seed) exactly.
    GaussianStream order_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    const auto start_time = std::chrono::steady_clock::now();
    auto elapsed_ms = [&start_time] {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                         start_time)
            .count();
    };

    res.trace.push_back(nonconvex_cost(net, x, y, cfg.beta, cfg.loss));
    res.wall_ms.push_back(0.0);

    Vector grad_u(d * m), grad_a(m), act(m), pre(m);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i) {
            std::size_t j = order_rng.bounded(i);
            std::swap(order[i - 1], order[j]);
        }
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t stop = std::min(start + batch, n);
            const double boost = double(n) / double(stop - start);

            std::fill(grad_u.begin(), grad_u.end(), 0.0);
            std::fill(grad_a.begin(), grad_a.end(), 0.0);
            for (std::size_t b = start; b < stop; ++b) {
                const std::size_t i = order[b];
                double yhat = 0.0;
                for (std::size_t j = 0; j < m; ++j) {
                    double t = 0.0;
                    for (std::size_t k = 0; k < d; ++k) t += x(i, k) * net.u(k, j);
                    pre[j] = t;
                    act[j] = t > 0.0 ? t : 0.0;
                    yhat += net.alpha[j] * act[j];
                }
                const double g = boost * loss_slope(cfg.loss, yhat, y[i]);
                if (g == 0.0) continue;
                for (std::size_t j = 0; j < m; ++j) {
                    grad_a[j] += g * act[j];
                    const double gate = g * net.alpha[j] * relu_subgradient(pre[j]);
                    if (gate == 0.0) continue;
                    for (std::size_t k = 0; k < d; ++k) grad_u[k * m + j] += gate * x(i, k);
                }
            }
            const double lr = cfg.learning_rate;
            for (std::size_t k = 0; k < d; ++k)
                for (std::size_t j = 0; j < m; ++j)
                    net.u(k, j) -= lr * (grad_u[k * m + j] + cfg.beta * net.u(k, j));
            for (std::size_t j = 0; j < m; ++j)
                net.alpha[j] -= lr * (grad_a[j] + cfg.beta * net.alpha[j]);
        }
        double obj = std::numeric_limits<double>::infinity();
        if (all_finite(net.u.data()) && all_finite(net.alpha)) {
            obj = nonconvex_cost(net, x, y, cfg.beta, cfg.loss);
        }
        res.trace.push_back(obj);
        res.wall_ms.push_back(elapsed_ms());
        if (!std::isfinite(obj) || obj > 1e12) {
            res.diverged = true;
            break;
        }
    }
    return res;
}

}  // namespace convexnn
