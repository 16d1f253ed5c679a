#include "convexnn/datasets.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "convexnn/rng.hpp"

namespace convexnn {

std::pair<Matrix, Vector> dataset_line_1d() {
    Matrix x{{-2.0, 1.0}, {-1.0, 1.0}, {0.0, 1.0}, {1.0, 1.0}, {2.0, 1.0}};
    Vector y{1.0, -1.0, 1.0, 1.0, -1.0};
    return {std::move(x), std::move(y)};
}

std::pair<Matrix, Vector> dataset_2d_synthetic(SyntheticKind kind, std::size_t n,
                                               std::uint64_t seed) {
    if (n < 4) throw std::invalid_argument("dataset_2d_synthetic: need n >= 4");
    GaussianStream rng(seed);

    const std::size_t n_pos = n / 2;
    const bool plant = kind == SyntheticKind::anomaly;
    const std::size_t n_neg = n - n_pos - (plant ? 1 : 0);

    Matrix x(n, 2);
    Vector y(n, 0.0);
    double cx = 0.0, cy = 0.0;
    std::size_t row = 0;
    for (std::size_t i = 0; i < n_pos; ++i, ++row) {
        x(row, 0) = 1.5 + 0.4 * rng.next();
        x(row, 1) = 1.5 + 0.4 * rng.next();
        y[row] = 1.0;
        cx += x(row, 0);
        cy += x(row, 1);
    }
    for (std::size_t i = 0; i < n_neg; ++i, ++row) {
        x(row, 0) = -1.5 + 0.4 * rng.next();
        x(row, 1) = -1.5 + 0.4 * rng.next();
        y[row] = -1.0;
    }
    if (plant) {
        x(row, 0) = cx / double(n_pos);
        x(row, 1) = cy / double(n_pos);
        y[row] = -1.0;
        ++row;
    }
    return {std::move(x), std::move(y)};
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\r' || cell.back() == '\t'))
            cell.pop_back();
        std::size_t start = 0;
        while (start < cell.size() && (cell[start] == ' ' || cell[start] == '\t')) ++start;
        cells.push_back(cell.substr(start));
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

[[noreturn]] void parse_fail(const std::string& path, std::size_t line, std::size_t col,
                             const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ":" + std::to_string(col) +
                             ": " + what);
}

}  // namespace

std::pair<Matrix, Vector> load_csv(const std::string& path, const std::string& label_col,
                                   bool add_ones) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_csv: " + path + " is empty");
    std::vector<std::string> header = split_line(line);
    if (header.empty()) throw std::runtime_error("load_csv: " + path + " has an empty header");

    std::size_t label_idx = header.size();
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == label_col) {
            label_idx = j;
            break;
        }
    }
    if (label_idx == header.size()) {
        throw std::runtime_error("load_csv: " + path + " has no column named '" + label_col + "'");
    }

    std::vector<Vector> feature_rows;
    Vector labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::vector<std::string> cells = split_line(line);
        if (cells.size() != header.size()) {
            parse_fail(path, line_no, cells.size(),
                       "expected " + std::to_string(header.size()) + " cells, found " +
                           std::to_string(cells.size()));
        }
        Vector feats;
        feats.reserve(header.size() - 1);
        for (std::size_t j = 0; j < cells.size(); ++j) {
            const std::string& cell = cells[j];
            if (cell.empty()) parse_fail(path, line_no, j + 1, "empty cell");
            char* end = nullptr;
            double val = std::strtod(cell.c_str(), &end);
            if (end != cell.c_str() + cell.size()) {
                parse_fail(path, line_no, j + 1, "non-numeric cell '" + cell + "'");
            }
            if (j == label_idx) {
                labels.push_back(val);
            } else {
                feats.push_back(val);
            }
        }
        feature_rows.push_back(std::move(feats));
    }
    if (feature_rows.empty()) {
        throw std::runtime_error("load_csv: " + path + " has a header but no data rows");
    }

    const std::size_t d = header.size() - 1;
    Matrix x(feature_rows.size(), d);
    for (std::size_t i = 0; i < feature_rows.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) x(i, j) = feature_rows[i][j];
    }
    if (add_ones) x = append_ones(x);
    return {std::move(x), std::move(labels)};
}

Matrix append_ones(const Matrix& x) {
    Matrix out(x.rows(), x.cols() + 1);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = x(i, j);
        out(i, x.cols()) = 1.0;
    }
    return out;
}

}  // namespace convexnn
