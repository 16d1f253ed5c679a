#pragma once

#include <string>
#include <utility>

#include "convexnn/numerics.hpp"

namespace convexnn {

// The five-point line fit used throughout the experiments: x = -2..2 with a
// ones column for the bias, labels (1, -1, 1, 1, -1).
std::pair<Matrix, Vector> dataset_line_1d();

enum class SyntheticKind { clusters, anomaly };

// Seeded 2-D toy sets with labels in {-1, +1}.  `clusters` draws two
// well-separated Gaussian blobs.  `anomaly` additionally plants exactly one
// negative point at the centroid of the positive blob, strictly inside its
// convex hull.
std::pair<Matrix, Vector> dataset_2d_synthetic(SyntheticKind kind, std::size_t n,
                                               std::uint64_t seed);

// Numeric CSV with a header row.  The named label column becomes y; the
// remaining columns become features in header order.  add_ones appends a
// bias column of ones.  Parse failures report line and column numbers.
std::pair<Matrix, Vector> load_csv(const std::string& path, const std::string& label_col,
                                   bool add_ones = false);

Matrix append_ones(const Matrix& x);

}  // namespace convexnn
