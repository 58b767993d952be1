#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "mpcq/symplectic.hpp"

namespace testing_support {

using mpcq::Mat;
using mpcq::Vec;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline Mat random_symmetric(int d, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> nd(0.0, scale);
  Mat s(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) s(i, j) = s(j, i) = nd(rng);
  return s;
}

/// exp(J S) for a random symmetric S.
inline Mat random_symplectic(int n, std::mt19937_64& rng, double scale = 0.4) {
  return (mpcq::complex_structure(n) * random_symmetric(2 * n, rng, scale)).exp();
}

/// Random element of Sp(V;W) for the standard convention: S couples slot 0 only to slot n.
inline Mat random_adapted(int n, std::mt19937_64& rng, double scale = 0.4) {
  Mat s = random_symmetric(2 * n, rng, scale);
  for (int j = 0; j < 2 * n; ++j) {
    if (j == n) continue;
    s(0, j) = s(j, 0) = 0.0;
  }
  return (mpcq::complex_structure(n) * s).exp();
}

/// Block rotation with complex form diag(e^{i turns_j t}).
inline Mat unitary_rotation(int n, const std::vector<int>& turns, double t) {
  Mat r = Mat::Zero(2 * n, 2 * n);
  for (int j = 0; j < n; ++j) {
    const double a = turns[static_cast<std::size_t>(j)] * t;
    r(j, j) = std::cos(a);
    r(j, n + j) = std::sin(a);
    r(n + j, j) = -std::sin(a);
    r(n + j, n + j) = std::cos(a);
  }
  return r;
}

}  // namespace testing_support
