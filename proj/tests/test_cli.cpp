#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"

#include "convexnn/experiment.hpp"

using namespace convexnn;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("convexnn_tests_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    REQUIRE(out.good());
    out << text;
}

ExperimentConfig tiny_relu_config() {
    ExperimentConfig cfg;
    cfg.dataset.name = "line-1d";
    cfg.beta = 1e-2;
    cfg.solver.tol_abs = 1e-10;
    cfg.solver.tol_rel = 1e-10;
    cfg.solver.max_iter = 100000;
    cfg.sgd.epochs = 30;
    cfg.sgd.m = 6;
    cfg.sgd.beta = cfg.beta;
    cfg.sgd.loss = cfg.loss;
    cfg.trials = 2;
    cfg.threads = 2;
    return cfg;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("line dataset is the frozen five-point instance") {
    auto [x, y] = dataset_line_1d();
    REQUIRE(x.rows() == 5);
    REQUIRE(x.cols() == 2);
    const double first[5] = {-2, -1, 0, 1, 2};
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(x(i, 0) == first[i]);
        CHECK(x(i, 1) == 1.0);
    }
    const double labels[5] = {1, -1, 1, 1, -1};
    for (std::size_t i = 0; i < 5; ++i) CHECK(y[i] == labels[i]);

    CHECK(enumerate_exact(x).size() == 10);
}

TEST_CASE("synthetic planar datasets are seeded and labeled") {
    auto [xa, ya] = dataset_2d_synthetic(SyntheticKind::clusters, 12, 3);
    auto [xb, yb] = dataset_2d_synthetic(SyntheticKind::clusters, 12, 3);
    CHECK(xa.data() == xb.data());
    CHECK(ya == yb);
    auto [xc, yc] = dataset_2d_synthetic(SyntheticKind::clusters, 12, 4);
    CHECK(xa.data() != xc.data());

    for (double v : ya) CHECK((v == 1.0 || v == -1.0));
    // first half positive around (1.5, 1.5), rest negative around (-1.5, -1.5)
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(ya[i] == 1.0);
        CHECK(xa(i, 0) > 0.0);
    }
    for (std::size_t i = 6; i < 12; ++i) CHECK(ya[i] == -1.0);

    CHECK_THROWS_AS(dataset_2d_synthetic(SyntheticKind::clusters, 3, 0), std::invalid_argument);
}

TEST_CASE("the anomaly variant plants one negative at the positive centroid") {
    const std::size_t n = 10;
    auto [x, y] = dataset_2d_synthetic(SyntheticKind::anomaly, n, 7);
    const std::size_t n_pos = n / 2;
    double cx = 0.0, cy = 0.0;
    for (std::size_t i = 0; i < n_pos; ++i) {
        REQUIRE(y[i] == 1.0);
        cx += x(i, 0);
        cy += x(i, 1);
    }
    cx /= double(n_pos);
    cy /= double(n_pos);
    CHECK(y[n - 1] == -1.0);
    CHECK(x(n - 1, 0) == doctest::Approx(cx).epsilon(1e-12));
    CHECK(x(n - 1, 1) == doctest::Approx(cy).epsilon(1e-12));
}

TEST_CASE("csv loading keeps feature order and honors the label column") {
    fs::path dir = fresh_dir("csv");
    fs::path file = dir / "data.csv";
    write_text(file, "a,y,b\n1.5,1,2.5\n-0.5,-1,0.25\n");

    auto [x, y] = load_csv(file.string(), "y");
    REQUIRE(x.rows() == 2);
    REQUIRE(x.cols() == 2);
    CHECK(x(0, 0) == 1.5);
    CHECK(x(0, 1) == 2.5);
    CHECK(x(1, 0) == -0.5);
    CHECK(x(1, 1) == 0.25);
    CHECK(y[0] == 1.0);
    CHECK(y[1] == -1.0);

    auto [xb, yb] = load_csv(file.string(), "y", true);
    REQUIRE(xb.cols() == 3);
    CHECK(xb(0, 2) == 1.0);
    CHECK(xb(1, 2) == 1.0);

    fs::remove_all(dir);
}

TEST_CASE("csv errors name the file position and the missing pieces") {
    fs::path dir = fresh_dir("csv_err");

    fs::path no_label = dir / "no_label.csv";
    write_text(no_label, "a,b\n1,2\n");
    CHECK_THROWS_WITH_AS(load_csv(no_label.string(), "y"),
                         doctest::Contains("no column named 'y'"), std::runtime_error);

    fs::path header_only = dir / "header_only.csv";
    write_text(header_only, "a,y\n");
    CHECK_THROWS_WITH_AS(load_csv(header_only.string(), "y"),
                         doctest::Contains("header but no data rows"), std::runtime_error);

    fs::path bad_cell = dir / "bad_cell.csv";
    write_text(bad_cell, "a,y\n1,ok\n");
    CHECK_THROWS_WITH_AS(load_csv(bad_cell.string(), "y"), doctest::Contains(":2:2:"),
                         std::runtime_error);

    fs::path ragged = dir / "ragged.csv";
    write_text(ragged, "a,y\n1,2,3\n");
    CHECK_THROWS_WITH_AS(load_csv(ragged.string(), "y"), doctest::Contains("expected 2 cells"),
                         std::runtime_error);

    CHECK_THROWS_WITH_AS(load_csv((dir / "missing.csv").string(), "y"),
                         doctest::Contains("cannot open"), std::runtime_error);
    fs::remove_all(dir);
}

TEST_CASE("appending a bias column leaves features untouched") {
    Matrix x{{1.0, 2.0}, {3.0, 4.0}};
    Matrix out = append_ones(x);
    REQUIRE(out.cols() == 3);
    CHECK(out(0, 0) == 1.0);
    CHECK(out(1, 1) == 4.0);
    CHECK(out(0, 2) == 1.0);
    CHECK(out(1, 2) == 1.0);
}

TEST_CASE("arrangement and network json round-trips are exact") {
    auto [x, y] = dataset_line_1d();
    ArrangementSet s = enumerate_exact(x);
    ArrangementSet back = arrangement_from_json(arrangement_to_json(s));
    REQUIRE(back.size() == s.size());
    CHECK(back.n == s.n);
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(back.patterns[i].key() == s.patterns[i].key());
        CHECK(back.witnesses[i] == s.witnesses[i]);
    }

    json mangled = arrangement_to_json(s);
    mangled["witnesses"].erase(0);
    CHECK_THROWS_AS(arrangement_from_json(mangled), std::invalid_argument);

    TwoLayerReLUNet net;
    net.d = 2;
    net.m = 3;
    net.u = Matrix{{0.1, -2.5, 3.25}, {1e-17, 4.0, -0.75}};
    net.alpha = {0.5, -1.5, 2.0};
    TwoLayerReLUNet nb = network_from_json(network_to_json(net));
    CHECK(nb.d == net.d);
    CHECK(nb.m == net.m);
    CHECK(nb.u.data() == net.u.data());
    CHECK(nb.alpha == net.alpha);
}

TEST_CASE("json and csv file helpers") {
    fs::path dir = fresh_dir("io");

    json j;
    j["k"] = 0.1 + 0.2;
    j["list"] = {1, 2, 3};
    const fs::path jf = dir / "x.json";
    write_json_file(jf.string(), j);
    json back = read_json_file(jf.string());
    CHECK(back["k"].get<double>() == j["k"].get<double>());
    CHECK(back["list"].size() == 3);

    write_text(dir / "broken.json", "{ not json");
    CHECK_THROWS_AS(read_json_file((dir / "broken.json").string()), std::runtime_error);

    const double v = 0.1 + 0.2;
    CHECK(std::stod(format_g17(v)) == v);

    const fs::path cf = dir / "t.csv";
    write_csv(cf.string(), {"i", "val"}, {{0.0, 1.5}, {1.0, -2.25}});
    std::ifstream in(cf);
    std::string line;
    std::getline(in, line);
    CHECK(line == "i,val");
    std::getline(in, line);
    CHECK(line.find("1.5") != std::string::npos);

    CHECK_THROWS_AS(write_csv(cf.string(), {"a", "b"}, {{1.0}}), std::invalid_argument);
    fs::remove_all(dir);
}

TEST_CASE("experiment config parses with defaults and rejects contradictions") {
    json j;
    j["dataset"] = {{"name", "line-1d"}};
    ExperimentConfig cfg = config_from_json(j);
    CHECK_NOTHROW(validate(cfg));
    CHECK(cfg.model == ModelKind::relu);
    CHECK(cfg.patterns.source == PatternSource::exact);
    CHECK(cfg.beta == 1e-3);
    CHECK(cfg.trials == 1);

    json full;
    full["dataset"] = {{"name", "clusters"}, {"n", 16}, {"seed", 5}};
    full["model"] = "relu";
    full["patterns"] = {{"source", "alg3"}, {"quantile", 0.4}};
    full["beta"] = 0.05;
    full["loss"] = "hinge";
    full["solver"] = {{"tol_abs", 1e-8}, {"max_iter", 5000}};
    full["sgd"] = {{"epochs", 10}, {"m", 12}, {"learning_rate", 0.5}};
    full["trials"] = 3;
    ExperimentConfig fc = config_from_json(full);
    CHECK_NOTHROW(validate(fc));
    CHECK(fc.patterns.source == PatternSource::alg3);
    CHECK(fc.patterns.quantile == 0.4);
    CHECK(fc.loss == LossKind::hinge);
    CHECK(fc.sgd.m == 12);
    CHECK(fc.sgd.beta == 0.05);  // shared penalty propagates to the baseline
    CHECK(fc.trials == 3);

    json bad = j;
    bad["model"] = "quantum";
    CHECK_THROWS_AS(config_from_json(bad), std::invalid_argument);
    bad = j;
    bad["patterns"] = {{"source", "alg9"}};
    CHECK_THROWS_AS(config_from_json(bad), std::invalid_argument);
    bad = j;
    bad["trials"] = 0;
    CHECK_THROWS_AS(validate(config_from_json(bad)), std::invalid_argument);
    bad = j;
    bad["beta"] = -1.0;
    CHECK_THROWS_AS(validate(config_from_json(bad)), std::invalid_argument);
    bad = j;
    bad["dataset"] = {{"name", "line-1d"}, {"csv", "x.csv"}};
    CHECK_THROWS_AS(validate(config_from_json(bad)), std::invalid_argument);
    bad = j;
    bad["dataset"] = json::object();
    CHECK_THROWS_AS(validate(config_from_json(bad)), std::invalid_argument);
    bad = j;
    bad["patterns"] = {{"source", "alg3"}, {"quantile", 1.0}};
    CHECK_THROWS_AS(validate(config_from_json(bad)), std::invalid_argument);
}

TEST_CASE("experiment runs are reproducible apart from wall times") {
    ExperimentConfig cfg = tiny_relu_config();
    RunReport a = run_experiment(cfg);
    RunReport b = run_experiment(cfg);

    json ja = report_to_json(a, cfg);
    json jb = report_to_json(b, cfg);
    ja.erase("wall_ms_convex");
    ja.erase("wall_ms_sgd");
    jb.erase("wall_ms_convex");
    jb.erase("wall_ms_sgd");
    CHECK(ja == jb);

    REQUIRE(a.sgd_final_objectives.size() == 2);
    CHECK(a.certificate_valid);
    CHECK(a.solver_converged);
    CHECK(a.pattern_count == 10);
    CHECK(a.m_star >= 1);
}

TEST_CASE("experiment writes its artifacts and stage errors") {
    fs::path dir = fresh_dir("run");
    ExperimentConfig cfg = tiny_relu_config();
    cfg.trials = 1;
    cfg.out_dir = dir.string();
    run_experiment(cfg);
    CHECK(fs::exists(dir / "report.json"));
    CHECK(fs::exists(dir / "trace_convex.csv"));
    CHECK(fs::exists(dir / "trace_sgd_0.csv"));
    CHECK(fs::exists(dir / "network.json"));

    json report = read_json_file((dir / "report.json").string());
    CHECK(report["pattern_count"].get<std::size_t>() == 10);
    CHECK(report["solver_converged"].get<bool>());

    // a reloadable network that reproduces m_star neurons
    TwoLayerReLUNet net = network_from_json(read_json_file((dir / "network.json").string()));
    CHECK(net.m == report["m_star"].get<std::size_t>());

    fs::path errdir = fresh_dir("run_err");
    ExperimentConfig bad = tiny_relu_config();
    bad.dataset.name.clear();
    bad.dataset.csv_path = (errdir / "missing.csv").string();
    bad.out_dir = errdir.string();
    CHECK_THROWS_AS(run_experiment(bad), std::runtime_error);
    REQUIRE(fs::exists(errdir / "error.json"));
    json err = read_json_file((errdir / "error.json").string());
    CHECK(err["stage"].get<std::string>() == "dataset");
    CHECK_FALSE(err["message"].get<std::string>().empty());

    fs::remove_all(dir);
    fs::remove_all(errdir);
}

TEST_CASE("restricting the pattern set never improves the optimum") {
    ExperimentConfig exact = tiny_relu_config();
    exact.dataset.name = "clusters";
    exact.dataset.n = 6;
    exact.dataset.seed = 11;
    exact.beta = 1e-2;
    exact.run_sgd = false;
    exact.solver.tol_abs = 1e-11;
    exact.solver.tol_rel = 1e-11;
    exact.solver.max_iter = 300000;

    ExperimentConfig subset = exact;
    subset.patterns.source = PatternSource::alg2;
    subset.sgd.m = 12;  // twelve probe directions at initialization

    RunReport re = run_experiment(exact);
    RunReport rs = run_experiment(subset);
    REQUIRE(re.solver_converged);
    REQUIRE(rs.solver_converged);
    CHECK(rs.pattern_count <= re.pattern_count);
    CHECK(rs.convex_optimum >= re.convex_optimum - 1e-9);
}

}  // TEST_SUITE
