#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "emot/errors.hpp"
#include "emot/numerics.hpp"

namespace emot {

/// A probability measure on a finite grid of real points.
///
/// Points are strictly increasing; weights are non-negative and sum to one
/// within 1e-12. Zero-weight points stay in storage (grids keep their shape)
/// but are excluded from every effective-support query.
struct DiscreteMeasure {
  std::vector<double> points;
  std::vector<double> weights;

  DiscreteMeasure() = default;
  DiscreteMeasure(std::vector<double> pts, std::vector<double> wts)
      : points(std::move(pts)), weights(std::move(wts)) {
    validate();
  }

  [[nodiscard]] std::size_t size() const { return points.size(); }

  void validate() const {
    if (points.empty()) throw std::invalid_argument("measure: empty grid");
    if (points.size() != weights.size())
      throw std::invalid_argument("measure: points/weights length mismatch");
    for (std::size_t i = 0; i + 1 < points.size(); ++i)
      if (!(points[i] < points[i + 1]))
        throw std::invalid_argument("measure: points not strictly increasing");
    double neg = 0.0;
    bool any_positive = false;
    for (double w : weights) {
      if (!std::isfinite(w)) throw std::invalid_argument("measure: non-finite weight");
      if (w < 0.0) neg = std::min(neg, w);
      if (w > 0.0) any_positive = true;
    }
    if (neg < 0.0) throw std::invalid_argument("measure: negative weight");
    if (!any_positive) throw std::invalid_argument("measure: empty effective support");
    const double total = pairwise_sum(weights.data(), weights.size());
    if (std::abs(total - 1.0) > 1e-12)
      throw std::invalid_argument("measure: weights sum to " + std::to_string(total));
  }

  [[nodiscard]] double mean() const {
    std::vector<double> xw(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) xw[i] = points[i] * weights[i];
    return pairwise_sum(xw.data(), xw.size()) / pairwise_sum(weights.data(), weights.size());
  }

  /// Full grid extent, zero-weight points included.
  [[nodiscard]] double span() const { return points.back() - points.front(); }

  [[nodiscard]] std::size_t effective_count() const {
    std::size_t n = 0;
    for (double w : weights)
      if (w > 0.0) ++n;
    return n;
  }

  [[nodiscard]] double min_effective_point() const {
    for (std::size_t i = 0; i < weights.size(); ++i)
      if (weights[i] > 0.0) return points[i];
    throw std::logic_error("measure: empty effective support");
  }

  [[nodiscard]] double max_effective_point() const {
    for (std::size_t i = weights.size(); i-- > 0;)
      if (weights[i] > 0.0) return points[i];
    throw std::logic_error("measure: empty effective support");
  }
};

/// Expected value of (x - k)^+, the workhorse of convex-order checks.
inline double call_value(const DiscreteMeasure& m, double strike) {
  std::vector<double> terms;
  terms.reserve(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double payoff = m.points[i] - strike;
    if (payoff > 0.0 && m.weights[i] > 0.0) terms.push_back(payoff * m.weights[i]);
  }
  return pairwise_sum(terms.data(), terms.size());
}

/// Minimal multiplicative re-weighting that moves the measure's mean to
/// `target`: w_j <- w_j * (1 + a*(x_j - mean)), renormalized, iterated with
/// the multiplier clamped to [1/2, 3/2] so weights stay positive. Support is
/// unchanged (zero weights stay zero). Converges when the mean matches the
/// target within rel_tol of the grid span.
inline DiscreteMeasure tilt_to_mean(DiscreteMeasure m, double target, double rel_tol = 1e-13) {
  const double span = m.span();
  if (span <= 0.0) throw std::invalid_argument("tilt_to_mean: single-point grid");
  for (int pass = 0; pass < 256; ++pass) {
    const double mean = m.mean();
    const double delta = target - mean;
    if (std::abs(delta) <= rel_tol * span) return m;
    std::vector<double> dev2(m.size());
    for (std::size_t j = 0; j < m.size(); ++j) {
      const double d = m.points[j] - mean;
      dev2[j] = m.weights[j] * d * d;
    }
    const double var = pairwise_sum(dev2.data(), dev2.size());
    if (var <= 0.0) throw Error("tilt_to_mean: degenerate measure (zero variance)");
    double alpha = delta / var;
    double max_dev = 0.0;
    for (std::size_t j = 0; j < m.size(); ++j)
      if (m.weights[j] > 0.0) max_dev = std::max(max_dev, std::abs(m.points[j] - mean));
    if (std::abs(alpha) * max_dev > 0.5) alpha = 0.5 / max_dev * (alpha > 0 ? 1.0 : -1.0);
    for (std::size_t j = 0; j < m.size(); ++j)
      m.weights[j] *= 1.0 + alpha * (m.points[j] - mean);
    const double total = pairwise_sum(m.weights.data(), m.weights.size());
    for (double& w : m.weights) w /= total;
  }
  throw NoConvergence("tilt_to_mean: mean did not converge to target");
}

}  // namespace emot
