#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "convexnn/numerics.hpp"

namespace convexnn {

/// Activation mask of one ReLU region: bit i is true iff x_i^T u >= 0.
struct ActivationPattern {
  std::vector<bool> mask;

  std::string key() const;  // "0101...", bit i at position i
  static ActivationPattern from_key(const std::string& key);
  bool operator==(const ActivationPattern&) const = default;
};

/// Distinct realizable activation masks with one strict witness per mask.
/// Witnesses are unit vectors; sign(x_i^T witness) matches the mask strictly
/// on every nonzero row, and zero rows of x carry a forced-true bit.
struct ArrangementSet {
  std::size_t n = 0;  // number of data rows the masks refer to
  std::vector<ActivationPattern> patterns;
  std::vector<Vector> witnesses;  // aligned with patterns

  std::size_t size() const { return patterns.size(); }
};

/// Default strict-realizability margin: 1e-6 * max row norm of x.
double default_margin(const Matrix& x);

/// Number of sign regions the rows of an n-point, rank-r dataset can cut out:
/// 2 * sum_{k=0}^{r-1} C(n-1, k). Requires 1 <= r <= n; throws
/// std::overflow_error if the value does not fit in 64 bits.
std::uint64_t region_count_bound(std::uint64_t n, std::uint64_t r);

/// Max-margin strict interior point of {z : b z > 0}: a unit z maximizing
/// min_i b_i^T z, or nullopt when no strictly positive point exists (margin
/// below 1e-10 of the max row norm counts as empty). Solved exactly by the
/// least-distance reduction min ||z|| s.t. b z >= 1 through one NNLS pass.
std::optional<Vector> strict_witness(const Matrix& b);

/// Every mask realizable with margin >= `margin`, found by inserting the
/// (rank-reduced) data rows one at a time and splitting regions whose two
/// sides are both strictly feasible. margin < 0 picks default_margin(x).
/// Patterns come back sorted by key, witnesses max-margin and unit.
ArrangementSet enumerate_exact(const Matrix& x, double margin = -1.0);

/// Masks hit by hashing sign(x u) over `count` Gaussian directions u,
/// deduplicated and sorted by key; witnesses are the (normalized) draws.
ArrangementSet sample_patterns(const Matrix& x, std::size_t count, std::uint64_t seed);

/// Masks of the given directions, deduplicated in first-seen order and
/// dropped when not strictly realizable. A direction keeps itself as witness
/// when its own margin clears the default; otherwise the max-margin witness
/// is substituted (directions sitting exactly on a hyperplane still count).
ArrangementSet harvest_patterns(const Matrix& x, const std::vector<Vector>& directions);

/// harvest_patterns plus one flipped variant per direction: with
/// k = floor(quantile * n), the k smallest |x_i^T u| bits flip together
/// (ties at the threshold flip too; k == 0 flips nothing). Variants that are
/// not strictly realizable are dropped.
ArrangementSet adaptive_flip(const Matrix& x, const std::vector<Vector>& directions,
                             double quantile);

}  // namespace convexnn
