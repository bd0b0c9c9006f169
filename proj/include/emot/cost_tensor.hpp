#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace emot {

/// Dense cost array c[i][j][k] over the x/y/z grids, row-major in (i, j, k).
/// All entries are finite; the largest magnitude is recorded on construction
/// for overflow analysis.
struct CostTensor {
  std::array<std::size_t, 3> shape{0, 0, 0};
  std::vector<double> values;
  double max_abs = 0.0;

  CostTensor() = default;
  CostTensor(std::array<std::size_t, 3> s, std::vector<double> v)
      : shape(s), values(std::move(v)) {
    if (shape[0] == 0 || shape[1] == 0 || shape[2] == 0)
      throw std::invalid_argument("cost tensor: zero dimension");
    if (values.size() != shape[0] * shape[1] * shape[2])
      throw std::invalid_argument("cost tensor: size does not match shape");
    for (double c : values) {
      if (!std::isfinite(c)) throw std::invalid_argument("cost tensor: non-finite entry");
      max_abs = std::max(max_abs, std::abs(c));
    }
  }

  static CostTensor zeros(std::size_t n, std::size_t m, std::size_t l) {
    return CostTensor({n, m, l}, std::vector<double>(n * m * l, 0.0));
  }

  [[nodiscard]] std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
    return (i * shape[1] + j) * shape[2] + k;
  }

  [[nodiscard]] double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return values[index(i, j, k)];
  }

  [[nodiscard]] std::size_t size() const { return values.size(); }
};

}  // namespace emot
