#include "convexnn/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <thread>

namespace convexnn {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

LossKind loss_from_string(const std::string& s) {
    if (s == "squared") return LossKind::squared;
    if (s == "hinge") return LossKind::hinge;
    throw std::invalid_argument("config: unknown loss '" + s + "' (squared | hinge)");
}

std::string loss_to_string(LossKind loss) {
    return loss == LossKind::squared ? "squared" : "hinge";
}

ModelKind model_from_string(const std::string& s) {
    if (s == "relu") return ModelKind::relu;
    if (s == "linear-cnn") return ModelKind::linear_cnn;
    if (s == "circular-cnn") return ModelKind::circular_cnn;
    if (s == "separable-cnn") return ModelKind::separable_cnn;
    throw std::invalid_argument(
        "config: unknown model '" + s + "' (relu | linear-cnn | circular-cnn | separable-cnn)");
}

std::string model_to_string(ModelKind m) {
    switch (m) {
        case ModelKind::relu: return "relu";
        case ModelKind::linear_cnn: return "linear-cnn";
        case ModelKind::circular_cnn: return "circular-cnn";
        default: return "separable-cnn";
    }
}

PatternSource source_from_string(const std::string& s) {
    if (s == "exact") return PatternSource::exact;
    if (s == "sample") return PatternSource::sample;
    if (s == "alg1") return PatternSource::alg1;
    if (s == "alg2") return PatternSource::alg2;
    if (s == "alg3") return PatternSource::alg3;
    throw std::invalid_argument("config: unknown pattern source '" + s +
                                "' (exact | sample | alg1 | alg2 | alg3)");
}

std::string source_to_string(PatternSource s) {
    switch (s) {
        case PatternSource::exact: return "exact";
        case PatternSource::sample: return "sample";
        case PatternSource::alg1: return "alg1";
        case PatternSource::alg2: return "alg2";
        default: return "alg3";
    }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig cfg;
    try {
        if (j.contains("dataset")) {
            const json& d = j.at("dataset");
            cfg.dataset.name = get_or<std::string>(d, "name", "");
            cfg.dataset.csv_path = get_or<std::string>(d, "csv", "");
            cfg.dataset.label_col = get_or<std::string>(d, "label", "y");
            cfg.dataset.add_ones = get_or<bool>(d, "add_ones", false);
            cfg.dataset.n = get_or<std::size_t>(d, "n", 50);
            cfg.dataset.seed = get_or<std::uint64_t>(d, "seed", 0);
        }
        cfg.model = model_from_string(get_or<std::string>(j, "model", "relu"));
        if (j.contains("patterns")) {
            const json& p = j.at("patterns");
            cfg.patterns.source = source_from_string(get_or<std::string>(p, "source", "exact"));
            cfg.patterns.sample_count = get_or<std::size_t>(p, "count", 200);
            cfg.patterns.quantile = get_or<double>(p, "quantile", 0.25);
        }
        cfg.beta = get_or<double>(j, "beta", 1e-3);
        cfg.loss = loss_from_string(get_or<std::string>(j, "loss", "squared"));
        if (j.contains("solver")) {
            const json& s = j.at("solver");
            cfg.solver.rho = get_or<double>(s, "rho", cfg.solver.rho);
            cfg.solver.tol_abs = get_or<double>(s, "tol_abs", cfg.solver.tol_abs);
            cfg.solver.tol_rel = get_or<double>(s, "tol_rel", cfg.solver.tol_rel);
            cfg.solver.max_iter = get_or<std::size_t>(s, "max_iter", cfg.solver.max_iter);
        }
        if (j.contains("sgd")) {
            const json& s = j.at("sgd");
            cfg.sgd.learning_rate = get_or<double>(s, "learning_rate", cfg.sgd.learning_rate);
            cfg.sgd.batch_size = get_or<std::size_t>(s, "batch_size", cfg.sgd.batch_size);
            cfg.sgd.epochs = get_or<std::size_t>(s, "epochs", cfg.sgd.epochs);
            cfg.sgd.m = get_or<std::size_t>(s, "m", cfg.sgd.m);
            cfg.sgd.init_scale = get_or<double>(s, "init_scale", cfg.sgd.init_scale);
        }
        cfg.trials = get_or<std::size_t>(j, "trials", 1);
        cfg.seed = get_or<std::uint64_t>(j, "seed", 0);
        cfg.threads = get_or<std::size_t>(j, "threads", 0);
        cfg.out_dir = get_or<std::string>(j, "out", "");
        if (j.contains("geometry")) {
            const json& g = j.at("geometry");
            cfg.geometry.height = get_or<std::size_t>(g, "height", 0);
            cfg.geometry.width = get_or<std::size_t>(g, "width", 0);
            cfg.geometry.channels = get_or<std::size_t>(g, "channels", 1);
            cfg.geometry.filter_h = get_or<std::size_t>(g, "filter_h", 0);
            cfg.geometry.filter_w = get_or<std::size_t>(g, "filter_w", 0);
            cfg.geometry.stride = get_or<std::size_t>(g, "stride", 1);
        }
        if (j.contains("circulant")) {
            const json& c = j.at("circulant");
            cfg.circulant.filter_len = get_or<std::size_t>(c, "filter_len", 0);
            cfg.circulant.signal_len = get_or<std::size_t>(c, "signal_len", 0);
            cfg.circulant.penalty_scale = get_or<double>(c, "penalty_scale", 0.0);
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    // cfg.seed doubles as the default data / sgd seed when not given explicitly.
    if (!j.contains("dataset") || !j.at("dataset").contains("seed")) cfg.dataset.seed = cfg.seed;
    if (!j.contains("sgd") || !j.at("sgd").contains("seed")) {
        cfg.sgd.seed = cfg.seed;
    } else {
        cfg.sgd.seed = j.at("sgd").at("seed").get<std::uint64_t>();
    }
    cfg.sgd.loss = cfg.loss;
    cfg.sgd.beta = cfg.beta;
    validate(cfg);
    return cfg;
}

void validate(const ExperimentConfig& cfg) {
    const bool named = !cfg.dataset.name.empty();
    const bool from_csv = !cfg.dataset.csv_path.empty();
    if (named == from_csv) {
        throw std::invalid_argument(
            "config: exactly one of dataset.name and dataset.csv must be set");
    }
    if (named && cfg.dataset.name != "line-1d" && cfg.dataset.name != "clusters" &&
        cfg.dataset.name != "anomaly") {
        throw std::invalid_argument("config: unknown dataset '" + cfg.dataset.name +
                                    "' (line-1d | clusters | anomaly)");
    }
    if (cfg.trials == 0) throw std::invalid_argument("config: trials must be >= 1");
    if (!(cfg.beta > 0.0)) throw std::invalid_argument("config: beta must be > 0");
    if (!(cfg.solver.tol_abs > 0.0) || !(cfg.solver.tol_rel > 0.0) || !(cfg.solver.rho > 0.0)) {
        throw std::invalid_argument("config: solver tolerances and rho must be > 0");
    }
    if (cfg.solver.max_iter == 0) throw std::invalid_argument("config: solver.max_iter must be >= 1");
    if (cfg.patterns.source == PatternSource::sample && cfg.patterns.sample_count == 0) {
        throw std::invalid_argument("config: patterns.count must be >= 1 for source=sample");
    }
    if (cfg.patterns.source == PatternSource::alg3 &&
        !(cfg.patterns.quantile >= 0.0 && cfg.patterns.quantile < 1.0)) {
        throw std::invalid_argument("config: patterns.quantile must lie in [0, 1)");
    }
    if (cfg.sgd.m == 0) throw std::invalid_argument("config: sgd.m must be >= 1");
}

std::pair<Matrix, Vector> load_dataset(const DatasetSpec& spec) {
    if (!spec.csv_path.empty()) {
        return load_csv(spec.csv_path, spec.label_col, spec.add_ones);
    }
    if (spec.name == "line-1d") return dataset_line_1d();
    SyntheticKind kind =
        spec.name == "anomaly" ? SyntheticKind::anomaly : SyntheticKind::clusters;
    auto data = dataset_2d_synthetic(kind, spec.n, spec.seed);
    if (spec.add_ones) data.first = append_ones(data.first);
    return data;
}

namespace {

ArrangementSet merge_by_key(const ArrangementSet& a, const ArrangementSet& b) {
    std::map<std::string, Vector> seen;
    for (std::size_t i = 0; i < a.patterns.size(); ++i) seen.emplace(a.patterns[i].key(), a.witnesses[i]);
    for (std::size_t i = 0; i < b.patterns.size(); ++i) seen.emplace(b.patterns[i].key(), b.witnesses[i]);
    ArrangementSet out;
    out.n = a.n;
    for (const auto& [key, wit] : seen) {
        out.patterns.push_back(ActivationPattern::from_key(key));
        out.witnesses.push_back(wit);
    }
    return out;
}

double default_init_scale(const TrainConfig& sgd) {
    return sgd.init_scale > 0.0 ? sgd.init_scale : 1.0 / std::sqrt(double(sgd.m));
}

}  // namespace

ArrangementSet acquire_patterns(const Matrix& x, const Vector& y, const ExperimentConfig& cfg) {
    switch (cfg.patterns.source) {
        case PatternSource::exact:
            return enumerate_exact(x);
        case PatternSource::sample:
            return sample_patterns(x, cfg.patterns.sample_count, cfg.seed);
        case PatternSource::alg1: {
            TrainConfig tc = cfg.sgd;
            SgdResult trained = train_sgd(x, y, tc);
            ArrangementSet mined = harvest_patterns(x, trained.net);
            return merge_by_key(mined, sample_patterns(x, cfg.patterns.sample_count, cfg.seed));
        }
        case PatternSource::alg2: {
            TwoLayerReLUNet net =
                init_gaussian(x.cols(), cfg.sgd.m, cfg.sgd.seed, default_init_scale(cfg.sgd));
            return harvest_patterns(x, net);
        }
        default: {
            TwoLayerReLUNet net =
                init_gaussian(x.cols(), cfg.sgd.m, cfg.sgd.seed, default_init_scale(cfg.sgd));
            return adaptive_flip(x, net, cfg.patterns.quantile);
        }
    }
}

json report_to_json(const RunReport& r, const ExperimentConfig& cfg) {
    json j;
    j["model"] = model_to_string(cfg.model);
    j["loss"] = loss_to_string(cfg.loss);
    j["beta"] = cfg.beta;
    j["pattern_source"] = source_to_string(cfg.patterns.source);
    j["pattern_count"] = r.pattern_count;
    j["convex_optimum"] = r.convex_optimum;
    j["certified_gap"] = r.certified_gap;
    j["certificate_valid"] = r.certificate_valid;
    j["solver_converged"] = r.solver_converged;
    j["m_star"] = r.m_star;
    j["sgd_final_objectives"] = r.sgd_final_objectives;
    if (cfg.model == ModelKind::linear_cnn) j["sdp_check"] = r.sdp_check;
    if (!r.extra.is_null()) j["extra"] = r.extra;
    // Wall times last so consumers can strip the run-dependent tail fields.
    j["wall_ms_convex"] = r.wall_ms_convex;
    j["wall_ms_sgd"] = r.wall_ms_sgd;
    return j;
}

namespace {

void write_outputs(const ExperimentConfig& cfg, const RunReport& r,
                   const TwoLayerReLUNet* net) {
    if (cfg.out_dir.empty()) return;
    write_json_file(cfg.out_dir + "/report.json", report_to_json(r, cfg));
    if (!r.convex_trace.empty()) {
        std::vector<Vector> rows;
        rows.reserve(r.convex_trace.size());
        for (std::size_t i = 0; i < r.convex_trace.size(); ++i)
            rows.push_back({double(i), r.convex_trace[i]});
        write_csv(cfg.out_dir + "/trace_convex.csv", {"iteration", "objective"}, rows);
    }
    for (std::size_t t = 0; t < r.sgd_traces.size(); ++t) {
        std::vector<Vector> rows;
        rows.reserve(r.sgd_traces[t].size());
        for (std::size_t e = 0; e < r.sgd_traces[t].size(); ++e) {
            const bool have_wall =
                t < r.sgd_trace_wall_ms.size() && e < r.sgd_trace_wall_ms[t].size();
            rows.push_back(
                {double(e), r.sgd_traces[t][e], have_wall ? r.sgd_trace_wall_ms[t][e] : 0.0});
        }
        write_csv(cfg.out_dir + "/trace_sgd_" + std::to_string(t) + ".csv",
                  {"epoch", "objective", "wall_ms"}, rows);
    }
    if (net != nullptr) write_json_file(cfg.out_dir + "/network.json", network_to_json(*net));
}

[[noreturn]] void fail_stage(const ExperimentConfig& cfg, const std::string& stage,
                             const std::exception& e) {
    if (!cfg.out_dir.empty()) {
        try {
            write_json_file(cfg.out_dir + "/error.json",
                            json{{"stage", stage}, {"message", e.what()}});
        } catch (...) {
        }
    }
    throw;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg) {
    validate(cfg);
    RunReport report;

    if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);

    Matrix x;
    Vector y;
    try {
        std::tie(x, y) = load_dataset(cfg.dataset);
    } catch (const std::exception& e) {
        fail_stage(cfg, "dataset", e);
    }

    // CNN models run their own convex pipeline and skip patterns/SGD.
    if (cfg.model == ModelKind::linear_cnn || cfg.model == ModelKind::circular_cnn) {
        try {
            const auto t0 = Clock::now();
            if (cfg.model == ModelKind::linear_cnn) {
                PatchSet ps = extract_patches(x, cfg.geometry.height, cfg.geometry.width,
                                              cfg.geometry.channels, cfg.geometry.filter_h,
                                              cfg.geometry.filter_w, cfg.geometry.stride);
                LinearCnnResult lc = train_linear_cnn(ps, y, cfg.beta, cfg.solver);
                report.convex_optimum = lc.diagnostics.objective_trace.empty()
                                            ? 0.0
                                            : lc.diagnostics.objective_trace.back();
                report.convex_trace = lc.diagnostics.objective_trace;
                report.solver_converged = lc.diagnostics.converged;
                report.sdp_check = lc.sdp_check;
                json filters = json::array();
                for (std::size_t k = 0; k < lc.z.cols(); ++k) filters.push_back(lc.z.col(k));
                report.extra = json{{"filters", filters}};
            } else {
                CirculantSpec spec = cfg.circulant;
                if (spec.signal_len == 0) spec.signal_len = x.cols();
                if (spec.filter_len == 0) spec.filter_len = spec.signal_len;
                CircularCnnResult cc = train_circular_cnn(x, y, cfg.beta, spec, cfg.solver);
                report.convex_optimum = cc.value;
                report.convex_trace = cc.diagnostics.objective_trace;
                report.solver_converged = cc.diagnostics.converged;
                auto [re, im] = time_domain_weights(cc.z);
                report.extra = json{{"time_domain_weights", re}, {"time_domain_imag", im}};
            }
            report.wall_ms_convex = ms_since(t0);
            if (!report.solver_converged) {
                throw SolverNotConverged("convex solve stopped before reaching tolerance");
            }
        } catch (const std::exception& e) {
            fail_stage(cfg, "solve", e);
        }
        write_outputs(cfg, report, nullptr);
        return report;
    }

    if (cfg.model == ModelKind::separable_cnn) {
        try {
            PatchSet ps = extract_patches(x, cfg.geometry.height, cfg.geometry.width,
                                          cfg.geometry.channels, cfg.geometry.filter_h,
                                          cfg.geometry.filter_w, cfg.geometry.stride);
            // Per-position targets: the single label spread evenly over the
            // K positions, so the blocks sum back to y.
            std::vector<Vector> blocks(ps.patches.size(),
                                       scaled(y, 1.0 / double(ps.patches.size())));
            std::tie(x, y) = stack_separable(ps, blocks);
        } catch (const std::exception& e) {
            fail_stage(cfg, "dataset", e);
        }
    }

    ConvexTrainingProblem problem;
    TwoLayerReLUNet net;
    bool have_net = false;
    if (cfg.run_convex) {
        try {
            problem.x = x;
            problem.y = y;
            problem.beta = cfg.beta;
            problem.loss = cfg.loss;
            problem.patterns = acquire_patterns(x, y, cfg);
            report.pattern_count = problem.patterns.size();
            validate(problem);
        } catch (const std::exception& e) {
            fail_stage(cfg, "patterns", e);
        }

        GroupSolveResult solved;
        try {
            const auto t0 = Clock::now();
            solved = solve_group_cone(problem, cfg.solver);
            report.wall_ms_convex = ms_since(t0);
            report.convex_optimum = objective(problem, solved.solution);
            report.convex_trace = solved.diagnostics.objective_trace;
            report.solver_converged = solved.diagnostics.converged;
            if (!solved.diagnostics.converged) {
                throw SolverNotConverged("convex solve stopped before reaching tolerance");
            }
        } catch (const std::exception& e) {
            fail_stage(cfg, "solve", e);
        }

        try {
            DualCertificate cert = dual_certificate(problem, solved.solution);
            report.certified_gap = cert.certified_gap;
            report.certificate_valid = cert.valid;
        } catch (const std::exception& e) {
            fail_stage(cfg, "certificate", e);
        }

        try {
            net = reconstruct(solved.solution, problem.patterns);
            report.m_star = net.m;
            have_net = true;
        } catch (const std::exception& e) {
            fail_stage(cfg, "reconstruct", e);
        }
    }

    if (cfg.run_sgd) try {
        report.sgd_final_objectives.assign(cfg.trials, 0.0);
        report.wall_ms_sgd.assign(cfg.trials, 0.0);
        report.sgd_traces.assign(cfg.trials, Vector{});
        report.sgd_trace_wall_ms.assign(cfg.trials, Vector{});

        std::size_t workers = cfg.threads > 0 ? cfg.threads : std::thread::hardware_concurrency();
        if (workers == 0) workers = 1;
        workers = std::min(workers, cfg.trials);

        std::atomic<std::size_t> next{0};
        std::vector<std::string> failures(cfg.trials);
        auto worker = [&] {
            for (std::size_t t = next.fetch_add(1); t < cfg.trials; t = next.fetch_add(1)) {
                try {
                    TrainConfig tc = cfg.sgd;
                    tc.seed = cfg.sgd.seed + t;
                    const auto t0 = Clock::now();
                    SgdResult sr = train_sgd(x, y, tc);
                    report.wall_ms_sgd[t] = ms_since(t0);
                    report.sgd_traces[t] = std::move(sr.trace);
                    report.sgd_trace_wall_ms[t] = std::move(sr.wall_ms);
                    report.sgd_final_objectives[t] = report.sgd_traces[t].back();
                } catch (const std::exception& e) {
                    failures[t] = e.what();
                }
            }
        };
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i + 1 < workers; ++i) pool.emplace_back(worker);
        worker();
        for (auto& th : pool) th.join();
        for (const auto& f : failures) {
            if (!f.empty()) throw std::runtime_error("sgd trial failed: " + f);
        }
    } catch (const std::exception& e) {
        fail_stage(cfg, "sgd", e);
    }

    try {
        write_outputs(cfg, report, have_net ? &net : nullptr);
    } catch (const std::exception& e) {
        fail_stage(cfg, "report", e);
    }
    return report;
}

}  // namespace convexnn
