#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace emot {

/// Cascade (pairwise) summation: error grows like log2(n) rather than n,
/// and the reduction tree is a pure function of element order, so identical
/// inputs reproduce identical sums.
inline double pairwise_sum(const double* a, std::size_t n) {
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(a, half) + pairwise_sum(a + half, n - half);
}

inline double pairwise_sum(std::span<const double> a) {
  return pairwise_sum(a.data(), a.size());
}

/// log(sum_t w_t * exp(e_t)) with the max exponent factored out.
/// Terms with w_t == 0 are ignored entirely (their e_t may be anything).
/// `scratch` is reused storage for the scaled terms.
inline double log_sum_exp_weighted(std::span<const double> exponents,
                                   std::span<const double> weights,
                                   std::vector<double>& scratch) {
  const std::size_t n = exponents.size();
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < n; ++t)
    if (weights[t] > 0.0 && exponents[t] > m) m = exponents[t];
  if (!std::isfinite(m)) return -std::numeric_limits<double>::infinity();
  scratch.clear();
  for (std::size_t t = 0; t < n; ++t)
    if (weights[t] > 0.0) scratch.push_back(weights[t] * std::exp(exponents[t] - m));
  return m + std::log(pairwise_sum(scratch.data(), scratch.size()));
}

/// Ordinary least squares y ~ slope*x + intercept.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / static_cast<double>(n);
  const double my = sy / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

}  // namespace emot
