#include <cstdio>
#include <filesystem>
#include <string>

#include "CLI11.hpp"

#include "convexnn/experiment.hpp"

namespace {

using namespace convexnn;

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::int64_t seed = -1;
    std::int64_t threads = -1;
};

void attach(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config (json)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "override every seed in the config");
    cmd->add_option("--threads", args.threads, "worker pool size for trials");
}

ExperimentConfig load_config(const CommonArgs& args) {
    json raw = read_json_file(args.config_path);
    ExperimentConfig cfg = config_from_json(raw);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.seed >= 0) {
        cfg.seed = std::uint64_t(args.seed);
        cfg.dataset.seed = cfg.seed;
        cfg.sgd.seed = cfg.seed;
    }
    if (args.threads >= 0) cfg.threads = std::size_t(args.threads);
    if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);
    return cfg;
}

int cmd_enumerate(const CommonArgs& args) {
    ExperimentConfig cfg = load_config(args);
    auto [x, y] = load_dataset(cfg.dataset);
    (void)y;
    ArrangementSet s = enumerate_exact(x);
    std::printf("patterns: %zu (n = %zu, d = %zu)\n", s.size(), x.rows(), x.cols());
    if (!cfg.out_dir.empty()) {
        write_json_file(cfg.out_dir + "/patterns.json", arrangement_to_json(s));
    }
    return 0;
}

int cmd_pipeline(const CommonArgs& args, bool convex, bool sgd) {
    ExperimentConfig cfg = load_config(args);
    cfg.run_convex = convex;
    cfg.run_sgd = sgd;
    RunReport report = run_experiment(cfg);
    if (convex) {
        std::printf("convex optimum: %.12g (patterns %zu, gap %.3g, m* = %zu)\n",
                    report.convex_optimum, report.pattern_count, report.certified_gap,
                    report.m_star);
    }
    for (std::size_t t = 0; t < report.sgd_final_objectives.size(); ++t) {
        std::printf("sgd trial %zu: %.12g\n", t, report.sgd_final_objectives[t]);
    }
    return 0;
}

int cmd_cnn(const CommonArgs& args, ModelKind model) {
    ExperimentConfig cfg = load_config(args);
    cfg.model = model;
    cfg.run_sgd = false;
    RunReport report = run_experiment(cfg);
    std::printf("optimum: %.12g\n", report.convex_optimum);
    if (model == ModelKind::linear_cnn) std::printf("sdp check: %.12g\n", report.sdp_check);
    return 0;
}

int cmd_gauge(const CommonArgs& args) {
    ExperimentConfig cfg = load_config(args);
    json raw = read_json_file(args.config_path);
    double beta_small = 0.0;
    std::size_t samples = 2000;
    if (raw.contains("gauge")) {
        beta_small = raw["gauge"].value("beta_small", 0.0);
        samples = raw["gauge"].value("samples", std::size_t{2000});
    }
    auto [x, y] = load_dataset(cfg.dataset);
    double g = gauge_value(x, y, beta_small, cfg.solver);
    double support = polar_support(x, y, samples, cfg.seed);
    std::printf("gauge: %.12g\npolar support: %.12g\n", g, support);
    if (!cfg.out_dir.empty()) {
        write_json_file(cfg.out_dir + "/gauge.json",
                        json{{"gauge", g}, {"polar_support", support}});
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact convex training for two-layer ReLU networks"};
    app.require_subcommand(1);

    CommonArgs args;
    CLI::App* c_enum = app.add_subcommand("enumerate", "list every activation pattern");
    CLI::App* c_solve = app.add_subcommand("solve", "convex solve + certificate + network");
    CLI::App* c_sgd = app.add_subcommand("sgd", "nonconvex baseline trials");
    CLI::App* c_compare = app.add_subcommand("compare", "convex vs sgd, full report");
    CLI::App* c_nuclear = app.add_subcommand("cnn-nuclear", "linear cnn, nuclear norm");
    CLI::App* c_circular = app.add_subcommand("cnn-circular", "circular cnn, dft lasso");
    CLI::App* c_gauge = app.add_subcommand("gauge", "gauge value vs polar support");
    for (CLI::App* c : {c_enum, c_solve, c_sgd, c_compare, c_nuclear, c_circular, c_gauge}) {
        attach(c, args);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (c_enum->parsed()) return cmd_enumerate(args);
        if (c_solve->parsed()) return cmd_pipeline(args, true, false);
        if (c_sgd->parsed()) return cmd_pipeline(args, false, true);
        if (c_compare->parsed()) return cmd_pipeline(args, true, true);
        if (c_nuclear->parsed()) return cmd_cnn(args, ModelKind::linear_cnn);
        if (c_circular->parsed()) return cmd_cnn(args, ModelKind::circular_cnn);
        if (c_gauge->parsed()) return cmd_gauge(args);
    } catch (const convexnn::SolverNotConverged& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
