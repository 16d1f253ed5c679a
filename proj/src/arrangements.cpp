#include "convexnn/arrangements.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "convexnn/rng.hpp"

namespace convexnn {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

bool row_is_zero(const Matrix& x, std::size_t i) {
  for (std::size_t j = 0; j < x.cols(); ++j)
    if (x(i, j) != 0.0) return false;
  return true;
}

double max_row_norm(const Matrix& x) {
  double mx = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) mx = std::max(mx, norm2(x.row(i)));
  return mx;
}

}  // namespace

std::string ActivationPattern::key() const {
  std::string s(mask.size(), '0');
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) s[i] = '1';
  return s;
}

ActivationPattern ActivationPattern::from_key(const std::string& key) {
  ActivationPattern p;
  p.mask.resize(key.size());
  for (std::size_t i = 0; i < key.size(); ++i) {
    require(key[i] == '0' || key[i] == '1', "pattern key: expected 0/1 string");
    p.mask[i] = key[i] == '1';
  }
  return p;
}

double default_margin(const Matrix& x) { return 1e-6 * max_row_norm(x); }

std::uint64_t region_count_bound(std::uint64_t n, std::uint64_t r) {
  require(n >= 1 && r >= 1 && r <= n, "region_count_bound: need 1 <= r <= n");
  __uint128_t total = 0;
  __uint128_t binom = 1;  // C(n-1, 0)
  for (std::uint64_t k = 0; k < r; ++k) {
    if (k > 0) {
      binom = binom * (n - k) / k;  // C(n-1, k); exact because prefix products divide
    }
    total += binom;
    if (total > (__uint128_t)UINT64_MAX / 2)
      throw std::overflow_error("region_count_bound: exceeds 64 bits");
  }
  return static_cast<std::uint64_t>(2 * total);
}

std::optional<Vector> strict_witness(const Matrix& b) {
  const std::size_t k = b.rows(), r = b.cols();
  require(r >= 1, "strict_witness: zero-dimensional space");
  if (k == 0) {
    Vector z(r, 0.0);
    z[0] = 1.0;
    return z;
  }
  const double scale = max_row_norm(b);
  if (scale == 0.0) return std::nullopt;  // only zero rows: no strict point

  // Least-distance program min ||z|| s.t. (b/scale) z >= 1, via the
  // Lawson-Hanson reduction: nnls on e = [b^T/scale; 1^T] against e_{r+1}.
  Matrix e(r + 1, k);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < r; ++i) e(i, j) = b(j, i) / scale;
    e(r, j) = 1.0;
  }
  Vector f(r + 1, 0.0);
  f[r] = 1.0;
  const Vector lam = nnls(e, f);
  Vector res = sub(matvec(e, lam), f);
  if (norm2(res) <= 1e-10) return std::nullopt;  // zero residual <=> empty cone
  const double denom = res[r];
  if (denom == 0.0) return std::nullopt;
  Vector z(r);
  for (std::size_t i = 0; i < r; ++i) z[i] = -res[i] / denom;
  const double nz = norm2(z);
  if (nz == 0.0 || !all_finite(z)) return std::nullopt;
  for (double& v : z) v /= nz;
  // The normalized point must clear every constraint strictly.
  for (std::size_t j = 0; j < k; ++j)
    if (dot(b.row(j), z) <= 0.0) return std::nullopt;
  return z;
}

namespace {

struct Region {
  std::vector<signed char> sign;  // +1 / -1 per processed active row
  Vector z;                       // strict unit witness in reduced coordinates
};

Matrix signed_system(const Matrix& rows_reduced, const std::vector<std::size_t>& active,
                     const std::vector<signed char>& sign, std::size_t count, int extra_sign,
                     const Vector& extra_row) {
  const std::size_t r = rows_reduced.cols();
  const bool has_extra = !extra_row.empty();
  Matrix s(count + (has_extra ? 1 : 0), r);
  for (std::size_t k = 0; k < count; ++k)
    for (std::size_t j = 0; j < r; ++j)
      s(k, j) = static_cast<double>(sign[k]) * rows_reduced(active[k], j);
  if (has_extra)
    for (std::size_t j = 0; j < r; ++j)
      s(count, j) = static_cast<double>(extra_sign) * extra_row[j];
  return s;
}

void sort_by_key(ArrangementSet& set) {
  std::vector<std::size_t> order(set.patterns.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return set.patterns[a].key() < set.patterns[b].key();
  });
  ArrangementSet out;
  out.n = set.n;
  for (std::size_t i : order) {
    out.patterns.push_back(std::move(set.patterns[i]));
    out.witnesses.push_back(std::move(set.witnesses[i]));
  }
  set = std::move(out);
}

}  // namespace

ArrangementSet enumerate_exact(const Matrix& x, double margin) {
  require(x.rows() >= 1 && x.cols() >= 1, "enumerate_exact: empty data");
  if (margin < 0.0) margin = default_margin(x);
  const std::size_t n = x.rows(), d = x.cols();

  ArrangementSet out;
  out.n = n;

  const SvdResult dec = svd(x);
  const std::size_t r = dec.rank();
  if (r == 0) {  // all rows zero: single all-active region
    ActivationPattern p;
    p.mask.assign(n, true);
    Vector w(d, 0.0);
    w[0] = 1.0;
    out.patterns.push_back(std::move(p));
    out.witnesses.push_back(std::move(w));
    return out;
  }

  // Reduced coordinates: b_i = V_r^T x_i preserves every margin x_i^T u for
  // u = V_r z, so regions can be enumerated in rank(x) dimensions.
  Matrix vr(d, r);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < r; ++j) vr(i, j) = dec.v(i, j);
  const Matrix b = matmul(x, vr);  // n x r

  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < n; ++i)
    if (!row_is_zero(x, i)) active.push_back(i);

  std::vector<Region> regions;
  {
    Region root;
    root.z.assign(r, 0.0);
    root.z[0] = 1.0;
    regions.push_back(std::move(root));
  }

  for (std::size_t step = 0; step < active.size(); ++step) {
    const Vector bi = b.row(active[step]);
    const double keep_tol = 1e-8 * norm2(bi);
    std::vector<Region> next;
    next.reserve(regions.size() * 2);
    for (const Region& reg : regions) {
      const double t = dot(bi, reg.z);
      for (const int side : {+1, -1}) {
        if (static_cast<double>(side) * t >= keep_tol) {
          Region kept = reg;
          kept.sign.push_back(static_cast<signed char>(side));
          next.push_back(std::move(kept));
          continue;
        }
        const Matrix sys = signed_system(b, active, reg.sign, reg.sign.size(), side, bi);
        if (auto z = strict_witness(sys)) {
          Region split;
          split.sign = reg.sign;
          split.sign.push_back(static_cast<signed char>(side));
          split.z = std::move(*z);
          next.push_back(std::move(split));
        }
      }
    }
    regions = std::move(next);
  }

  for (const Region& reg : regions) {
    // Final max-margin witness over the complete signed system.
    const Matrix sys = signed_system(b, active, reg.sign, reg.sign.size(), 0, Vector{});
    const auto z = strict_witness(sys);
    if (!z) continue;
    double reg_margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < active.size(); ++k)
      reg_margin = std::min(
          reg_margin, static_cast<double>(reg.sign[k]) * dot(b.row(active[k]), *z));
    if (reg_margin < margin) continue;

    ActivationPattern p;
    p.mask.assign(n, true);
    for (std::size_t k = 0; k < active.size(); ++k) p.mask[active[k]] = reg.sign[k] > 0;
    Vector u = matvec(vr, *z);
    out.patterns.push_back(std::move(p));
    out.witnesses.push_back(std::move(u));
  }
  sort_by_key(out);
  return out;
}

ArrangementSet sample_patterns(const Matrix& x, std::size_t count, std::uint64_t seed) {
  require(x.rows() >= 1 && x.cols() >= 1, "sample_patterns: empty data");
  require(count >= 1, "sample_patterns: count must be >= 1");
  const std::size_t n = x.rows(), d = x.cols();
  GaussianStream gs(seed);

  ArrangementSet out;
  out.n = n;
  std::unordered_set<std::string> seen;
  for (std::size_t c = 0; c < count; ++c) {
    Vector u = gs.next_vec(d);
    const double nu = norm2(u);
    if (nu == 0.0) continue;
    for (double& v : u) v /= nu;
    ActivationPattern p;
    p.mask.resize(n);
    bool strict = true;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = dot(x.row(i), u);
      p.mask[i] = t >= 0.0;
      if (t == 0.0 && !row_is_zero(x, i)) strict = false;
    }
    if (!strict) continue;  // witness sits on a hyperplane; skip the draw
    if (seen.insert(p.key()).second) {
      out.patterns.push_back(std::move(p));
      out.witnesses.push_back(std::move(u));
    }
  }
  sort_by_key(out);
  return out;
}

namespace {

// Realizability check for an arbitrary mask: max-margin witness of the signed
// full-space system, accepted when its margin clears eps.
std::optional<Vector> mask_witness(const Matrix& x, const std::vector<bool>& mask, double eps) {
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < x.rows(); ++i)
    if (!row_is_zero(x, i)) active.push_back(i);
  for (std::size_t i = 0; i < x.rows(); ++i)
    if (row_is_zero(x, i) && !mask[i]) return std::nullopt;  // zero rows are forced true
  if (active.empty()) {
    Vector w(x.cols(), 0.0);
    w[0] = 1.0;
    return w;
  }
  Matrix sys(active.size(), x.cols());
  for (std::size_t k = 0; k < active.size(); ++k) {
    const double s = mask[active[k]] ? 1.0 : -1.0;
    for (std::size_t j = 0; j < x.cols(); ++j) sys(k, j) = s * x(active[k], j);
  }
  auto w = strict_witness(sys);
  if (!w) return std::nullopt;
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < sys.rows(); ++k) m = std::min(m, dot(sys.row(k), *w));
  if (m < eps) return std::nullopt;
  return w;
}

ActivationPattern mask_of_direction(const Matrix& x, const Vector& u) {
  ActivationPattern p;
  p.mask.resize(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) p.mask[i] = dot(x.row(i), u) >= 0.0;
  return p;
}

// Adds (pattern, witness) when the mask is new and realizable. The preferred
// witness is kept when it strictly clears eps on its own.
void add_checked(const Matrix& x, ActivationPattern p, const Vector& preferred, double eps,
                 std::unordered_set<std::string>& seen, ArrangementSet& out) {
  const std::string key = p.key();
  if (seen.count(key)) return;
  const double nu = norm2(preferred);
  if (nu > 0.0) {
    Vector u = scaled(preferred, 1.0 / nu);
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < x.rows(); ++i) {
      if (row_is_zero(x, i)) continue;
      const double s = p.mask[i] ? 1.0 : -1.0;
      m = std::min(m, s * dot(x.row(i), u));
    }
    if (m >= eps) {
      seen.insert(key);
      out.patterns.push_back(std::move(p));
      out.witnesses.push_back(std::move(u));
      return;
    }
  }
  if (auto w = mask_witness(x, p.mask, eps)) {
    seen.insert(key);
    out.patterns.push_back(std::move(p));
    out.witnesses.push_back(std::move(*w));
  }
}

}  // namespace

ArrangementSet harvest_patterns(const Matrix& x, const std::vector<Vector>& directions) {
  require(x.rows() >= 1 && x.cols() >= 1, "harvest_patterns: empty data");
  require(!directions.empty(), "harvest_patterns: no directions given");
  const double eps = default_margin(x);
  ArrangementSet out;
  out.n = x.rows();
  std::unordered_set<std::string> seen;
  for (const Vector& u : directions) {
    require(u.size() == x.cols(), "harvest_patterns: direction size mismatch");
    add_checked(x, mask_of_direction(x, u), u, eps, seen, out);
  }
  return out;
}

ArrangementSet adaptive_flip(const Matrix& x, const std::vector<Vector>& directions,
                             double quantile) {
  require(x.rows() >= 1 && x.cols() >= 1, "adaptive_flip: empty data");
  require(quantile >= 0.0 && quantile <= 1.0, "adaptive_flip: quantile outside [0,1]");
  const std::size_t n = x.rows();
  const double eps = default_margin(x);
  ArrangementSet out;
  out.n = n;
  std::unordered_set<std::string> seen;
  const auto k = static_cast<std::size_t>(
      std::floor(quantile * static_cast<double>(n) + 1e-9));
  for (const Vector& u : directions) {
    require(u.size() == x.cols(), "adaptive_flip: direction size mismatch");
    ActivationPattern base = mask_of_direction(x, u);
    add_checked(x, base, u, eps, seen, out);
    if (k == 0) continue;
    Vector mags(n);
    for (std::size_t i = 0; i < n; ++i) mags[i] = std::abs(dot(x.row(i), u));
    Vector sorted = mags;
    std::sort(sorted.begin(), sorted.end());
    const double tau = sorted[k - 1];
    ActivationPattern variant = base;
    for (std::size_t i = 0; i < n; ++i)
      if (mags[i] <= tau) variant.mask[i] = !variant.mask[i];
    add_checked(x, variant, Vector{}, eps, seen, out);
  }
  return out;
}

}  // namespace convexnn
