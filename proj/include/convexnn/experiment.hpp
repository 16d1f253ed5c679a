#pragma once

#include <stdexcept>

#include "convexnn/baseline.hpp"
#include "convexnn/cnn.hpp"
#include "convexnn/datasets.hpp"
#include "convexnn/io.hpp"

namespace convexnn {

enum class ModelKind { relu, linear_cnn, circular_cnn, separable_cnn };
enum class PatternSource { exact, sample, alg1, alg2, alg3 };

// Exactly one of `name` (line-1d | clusters | anomaly) or `csv_path` selects
// the data; n and seed only apply to the synthetic kinds.
struct DatasetSpec {
    std::string name;
    std::string csv_path;
    std::string label_col = "y";
    bool add_ones = false;
    std::size_t n = 50;
    std::uint64_t seed = 0;
};

// alg1 = masks harvested from an SGD-trained net, merged with random samples;
// alg2 = masks of a freshly initialized net; alg3 = initialization masks plus
// quantile-flip variants.
struct PatternSpec {
    PatternSource source = PatternSource::exact;
    std::size_t sample_count = 200;
    double quantile = 0.25;
};

struct CnnGeometry {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 1;
    std::size_t filter_h = 0;
    std::size_t filter_w = 0;
    std::size_t stride = 1;
};

struct ExperimentConfig {
    DatasetSpec dataset;
    ModelKind model = ModelKind::relu;
    PatternSpec patterns;
    double beta = 1e-3;
    LossKind loss = LossKind::squared;
    SolverConfig solver;
    TrainConfig sgd;
    std::size_t trials = 1;
    std::uint64_t seed = 0;
    std::size_t threads = 0;  // 0 = hardware concurrency
    std::string out_dir;      // empty = no files written
    CnnGeometry geometry;     // linear-cnn / separable-cnn
    CirculantSpec circulant;  // circular-cnn
    // Stage toggles used by the single-purpose CLI verbs; not config keys.
    bool run_convex = true;
    bool run_sgd = true;
};

ExperimentConfig config_from_json(const json& j);
void validate(const ExperimentConfig& cfg);

struct RunReport {
    std::size_t pattern_count = 0;
    double convex_optimum = 0.0;
    double certified_gap = 0.0;
    bool certificate_valid = false;
    bool solver_converged = false;
    std::size_t m_star = 0;
    Vector convex_trace;
    Vector sgd_final_objectives;  // one per trial
    std::vector<Vector> sgd_traces;
    std::vector<Vector> sgd_trace_wall_ms;  // aligned with sgd_traces
    double wall_ms_convex = 0.0;
    Vector wall_ms_sgd;
    double sdp_check = 0.0;  // linear-cnn only
    json extra;              // model-specific values (cnn filters etc.)
};

json report_to_json(const RunReport& r, const ExperimentConfig& cfg);

// Raised when a solve inside the harness stops without reaching tolerance;
// the CLI maps it to its own exit code.
struct SolverNotConverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dataset -> pattern acquisition -> convex solve -> certificate ->
// reconstruction -> SGD trials -> report.  With a nonempty out_dir it writes
// report.json, trace_convex.csv, trace_sgd_<trial>.csv and network.json; a
// failing stage still writes error.json naming the stage before rethrowing.
RunReport run_experiment(const ExperimentConfig& cfg);

// Stages shared with the CLI verbs.
std::pair<Matrix, Vector> load_dataset(const DatasetSpec& spec);
ArrangementSet acquire_patterns(const Matrix& x, const Vector& y, const ExperimentConfig& cfg);

}  // namespace convexnn
