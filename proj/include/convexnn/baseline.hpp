#pragma once

#include "convexnn/network.hpp"

namespace convexnn {

// Minibatch subgradient descent on the regularized two-layer objective.
// batch_size is clamped to the dataset size; init_scale <= 0 selects the
// default 1/sqrt(m).
struct TrainConfig {
    double learning_rate = 1e-2;
    std::size_t batch_size = 25;
    std::size_t epochs = 2000;
    std::uint64_t seed = 0;
    LossKind loss = LossKind::squared;
    double beta = 1e-3;
    std::size_t m = 50;
    double init_scale = 0.0;
};

struct SgdResult {
    TwoLayerReLUNet net;
    // trace[0] is the objective at initialization, then one entry per
    // completed epoch; wall_ms holds the elapsed milliseconds at the same
    // points.
    Vector trace;
    Vector wall_ms;
    bool diverged = false;
};

// Subgradient of max(0, t); the value at t = 0 is 0.  The same convention
// drives both the ReLU and the hinge kink.
constexpr double relu_subgradient(double t) { return t > 0.0 ? 1.0 : 0.0; }

// d x m Gaussian hidden weights and m Gaussian output weights, every entry
// scaled by `scale`; identical seeds give identical nets.
TwoLayerReLUNet init_gaussian(std::size_t d, std::size_t m, std::uint64_t seed,
                              double scale);

// Runs cfg.epochs passes over x with a seeded shuffle per epoch.  The
// minibatch loss gradient is rescaled by n/|batch| so it estimates the
// full-batch gradient; the regularizer gradient enters at full strength.
// Stops early with diverged=true once the objective exceeds 1e12 or turns
// non-finite.
SgdResult train_sgd(const Matrix& x, const Vector& y, const TrainConfig& cfg);

}  // namespace convexnn
