#pragma once

// Helpers shared by the unit tests and the acceptance binary.

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <utility>

#include "repsim/linalg.hpp"

namespace repsim::testing {

inline DataMatrix gaussian_data(Index m, Index n, Rng& rng) {
  return DataMatrix(standard_normal(m, n, rng));
}

// Y = X W + noise, so pairs are neither identical nor unrelated.
inline std::pair<DataMatrix, DataMatrix> correlated_pair(Index m, Index nx, Index ny, Rng& rng,
                                                         double noise = 0.5) {
  const Matrix x = standard_normal(m, nx, rng);
  const Matrix w = standard_normal(nx, ny, rng) / std::sqrt(static_cast<double>(nx));
  const Matrix y = x * w + noise * standard_normal(m, ny, rng);
  return {DataMatrix(x), DataMatrix(y)};
}

inline Index uniform_index(Index lo, Index hi, Rng& rng) {
  return std::uniform_int_distribution<Index>(lo, hi)(rng);
}

inline double relative_gap(double a, double b) {
  return std::abs(a - b) / (1.0 + std::max(std::abs(a), std::abs(b)));
}

}  // namespace repsim::testing
