#include <cmath>

#include "doctest.h"

#include "convexnn/baseline.hpp"
#include "convexnn/rng.hpp"
#include "convexnn/solvers.hpp"

using namespace convexnn;

namespace {

Matrix line_matrix() { return Matrix{{-2, 1}, {-1, 1}, {0, 1}, {1, 1}, {2, 1}}; }
Vector line_labels() { return Vector{1, -1, 1, 1, -1}; }

}  // namespace

TEST_SUITE("baseline") {

TEST_CASE("relu subgradient picks slope zero at the kink") {
    CHECK(relu_subgradient(2.5) == 1.0);
    CHECK(relu_subgradient(0.0) == 0.0);
    CHECK(relu_subgradient(-1.0) == 0.0);
}

TEST_CASE("gaussian init is deterministic with a frozen draw order") {
    TwoLayerReLUNet a = init_gaussian(3, 2, 42, 0.5);
    TwoLayerReLUNet b = init_gaussian(3, 2, 42, 0.5);
    CHECK(a.u.data() == b.u.data());
    CHECK(a.alpha == b.alpha);

    TwoLayerReLUNet c = init_gaussian(3, 2, 43, 0.5);
    CHECK(a.u.data() != c.u.data());

    // row-major weight draws first, then the output layer, one stream
    GaussianStream rng(42);
    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t j = 0; j < 2; ++j) CHECK(a.u(k, j) == 0.5 * rng.next());
    for (std::size_t j = 0; j < 2; ++j) CHECK(a.alpha[j] == 0.5 * rng.next());

    CHECK_THROWS_AS(init_gaussian(3, 2, 1, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(init_gaussian(0, 2, 1, 1.0), std::invalid_argument);
}

TEST_CASE("config validation and trace bookkeeping") {
    Matrix x = line_matrix();
    Vector y = line_labels();

    TrainConfig cfg;
    cfg.epochs = 7;
    cfg.m = 3;
    cfg.seed = 9;
    SgdResult r = train_sgd(x, y, cfg);
    CHECK(r.trace.size() == 8);  // initial value plus one entry per epoch
    CHECK(r.wall_ms.size() == r.trace.size());
    CHECK(r.wall_ms.front() == 0.0);
    for (std::size_t i = 1; i < r.wall_ms.size(); ++i) CHECK(r.wall_ms[i] >= r.wall_ms[i - 1]);
    CHECK_FALSE(r.diverged);

    TrainConfig bad = cfg;
    bad.m = 0;
    CHECK_THROWS_AS(train_sgd(x, y, bad), std::invalid_argument);
    bad = cfg;
    bad.learning_rate = -1.0;
    CHECK_THROWS_AS(train_sgd(x, y, bad), std::invalid_argument);
    Vector short_y{1.0};
    CHECK_THROWS_AS(train_sgd(x, short_y, cfg), std::invalid_argument);
}

TEST_CASE("zero learning rate leaves the objective frozen") {
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.epochs = 4;
    cfg.m = 5;
    SgdResult r = train_sgd(line_matrix(), line_labels(), cfg);
    REQUIRE(r.trace.size() == 5);
    for (double v : r.trace) CHECK(v == r.trace.front());
}

TEST_CASE("batch size is clamped to the sample range") {
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.m = 3;
    cfg.batch_size = 0;  // clamps to 1
    CHECK_NOTHROW(train_sgd(line_matrix(), line_labels(), cfg));
    cfg.batch_size = 10000;  // clamps to n
    SgdResult r = train_sgd(line_matrix(), line_labels(), cfg);
    CHECK(r.trace.size() == 3);
}

TEST_CASE("identical seeds reproduce the run exactly") {
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.m = 8;
    cfg.batch_size = 2;
    cfg.seed = 77;
    SgdResult a = train_sgd(line_matrix(), line_labels(), cfg);
    SgdResult b = train_sgd(line_matrix(), line_labels(), cfg);
    CHECK(a.trace == b.trace);
    CHECK(a.net.u.data() == b.net.u.data());
    CHECK(a.net.alpha == b.net.alpha);
}

TEST_CASE("one full-batch step is an exact gradient step") {
    Matrix x = line_matrix();
    Vector y = line_labels();
    const std::size_t m = 4;
    const double beta = 0.05;

    // pick a seed whose initial activations sit away from every kink
    std::uint64_t seed = 0;
    TwoLayerReLUNet net0;
    bool found = false;
    for (std::uint64_t s = 1; s < 60 && !found; ++s) {
        net0 = init_gaussian(2, m, s, 1.0);
        double min_margin = 1e9;
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t j = 0; j < m; ++j) {
                double t = 0.0;
                for (std::size_t k = 0; k < 2; ++k) t += x(i, k) * net0.u(k, j);
                min_margin = std::min(min_margin, std::abs(t));
            }
        if (min_margin > 1e-3) {
            seed = s;
            found = true;
        }
    }
    REQUIRE(found);

    const double lr = 1e-7;
    TrainConfig cfg;
    cfg.learning_rate = lr;
    cfg.batch_size = x.rows();
    cfg.epochs = 1;
    cfg.seed = seed;
    cfg.beta = beta;
    cfg.m = m;
    cfg.init_scale = 1.0;
    SgdResult r = train_sgd(x, y, cfg);

    auto cost_at = [&](const TwoLayerReLUNet& n) {
        return nonconvex_cost(n, x, y, beta, LossKind::squared);
    };
    const double h = 1e-5;
    double gmax = 0.0;
    std::vector<double> analytic, numeric;
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t j = 0; j < m; ++j) {
            analytic.push_back((net0.u(k, j) - r.net.u(k, j)) / lr);
            TwoLayerReLUNet up = net0, dn = net0;
            up.u(k, j) += h;
            dn.u(k, j) -= h;
            numeric.push_back((cost_at(up) - cost_at(dn)) / (2.0 * h));
        }
    for (std::size_t j = 0; j < m; ++j) {
        analytic.push_back((net0.alpha[j] - r.net.alpha[j]) / lr);
        TwoLayerReLUNet up = net0, dn = net0;
        up.alpha[j] += h;
        dn.alpha[j] -= h;
        numeric.push_back((cost_at(up) - cost_at(dn)) / (2.0 * h));
    }
    for (double g : numeric) gmax = std::max(gmax, std::abs(g));
    REQUIRE(analytic.size() == numeric.size());
    for (std::size_t i = 0; i < analytic.size(); ++i)
        CHECK(std::abs(analytic[i] - numeric[i]) <= 1e-5 * (1.0 + gmax));
}

TEST_CASE("hinge training stays finite and respects the kink convention") {
    Matrix x = line_matrix();
    Vector y = line_labels();
    TrainConfig cfg;
    cfg.loss = LossKind::hinge;
    cfg.epochs = 50;
    cfg.m = 6;
    cfg.learning_rate = 1e-2;
    SgdResult r = train_sgd(x, y, cfg);
    CHECK_FALSE(r.diverged);
    for (double v : r.trace) CHECK(std::isfinite(v));
}

TEST_CASE("a divergent step size is reported, not thrown") {
    TrainConfig cfg;
    cfg.learning_rate = 1e6;
    cfg.epochs = 50;
    cfg.m = 8;
    SgdResult r = train_sgd(line_matrix(), line_labels(), cfg);
    CHECK(r.diverged);
    CHECK(r.trace.size() <= 51);
    const double last = r.trace.back();
    CHECK((!std::isfinite(last) || last > 1e12));
}

TEST_CASE("large penalty drives the network toward zero") {
    TrainConfig cfg;
    cfg.beta = 50.0;
    cfg.epochs = 400;
    cfg.m = 4;
    cfg.learning_rate = 1e-2;
    Matrix x = line_matrix();
    Vector y = line_labels();
    SgdResult r = train_sgd(x, y, cfg);
    REQUIRE_FALSE(r.diverged);
    // with beta this large the optimum is the zero network: loss(0, y)
    double y2 = 0.0;
    for (double v : y) y2 += v * v;
    CHECK(r.trace.back() == doctest::Approx(0.5 * y2).epsilon(1e-2));
}

TEST_CASE("descent never crosses the convex lower bound") {
    ConvexTrainingProblem p;
    p.x = line_matrix();
    p.y = line_labels();
    p.beta = 1e-3;
    p.patterns = enumerate_exact(p.x);
    SolverConfig scfg;
    scfg.tol_abs = 1e-11;
    scfg.tol_rel = 1e-11;
    scfg.max_iter = 400000;
    GroupSolveResult sol = solve_group_cone(p, scfg);
    REQUIRE(sol.diagnostics.converged);
    const double pstar = objective(p, sol.solution);

    for (std::uint64_t seed : {1u, 2u, 3u}) {
        TrainConfig cfg;
        cfg.epochs = 400;
        cfg.m = 50;
        cfg.seed = seed;
        cfg.beta = 1e-3;
        SgdResult r = train_sgd(p.x, p.y, cfg);
        REQUIRE_FALSE(r.diverged);
        CHECK(r.trace.back() >= pstar - 1e-6);
    }
}

}  // TEST_SUITE
