#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "convexnn/numerics.hpp"

namespace convexnn {

/// Deterministic scalar streams on top of mt19937_64. The Gaussian transform
/// (Box-Muller) and bounded-integer draw are pinned here instead of using
/// std::*_distribution so sampled values do not depend on the stdlib.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : eng_(seed) {}

  double uniform() {  // [0, 1)
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double next() {  // N(0, 1)
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  Vector next_vec(std::size_t n) {
    Vector v(n);
    for (double& x : v) x = next();
    return v;
  }

  std::uint64_t bounded(std::uint64_t n) {  // [0, n)
    return n == 0 ? 0 : eng_() % n;
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace convexnn
