#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "emot/errors.hpp"
#include "emot/numerics.hpp"

namespace emot {

/// One row's martingale equation: find h with
///   sum_j d_j * w_j * exp(-h * d_j) = 0,
/// where d_j are the displacements y_j - x_i and w_j >= 0 the row's Gibbs
/// weights. Zero-weight entries are inert. The residual is strictly
/// decreasing in h, so the root is unique whenever both displacement signs
/// carry weight.
struct RootProblem {
  std::vector<double> displacements;
  std::vector<double> weights;
  double warm_start = 0.0;
  double tolerance = 1e-12;

  void validate() const {
    if (displacements.size() != weights.size())
      throw std::invalid_argument("root problem: length mismatch");
    if (displacements.empty()) throw std::invalid_argument("root problem: empty");
    for (double w : weights)
      if (!(w >= 0.0)) throw std::invalid_argument("root problem: negative or NaN weight");
  }
};

namespace detail {

struct ScaledResidual {
  double value = 0.0;       // sum_j d_j w_j exp(-h d_j - m)
  double derivative = 0.0;  // -sum_j d_j^2 w_j exp(-h d_j - m), same scale
  double partition = 0.0;   // sum_j w_j exp(-h d_j - m), same scale; > 0

  /// |value| / partition is the row's conditional drift |E[d]| under the
  /// normalized Gibbs weights: the scale factor cancels, so this is the
  /// quantity a tolerance should bound. Comparing |value| alone against a
  /// tolerance is meaningless when the largest exponent carries a tiny
  /// weight (partition << 1): the drift can then be orders of magnitude
  /// larger than the scaled residual.
  [[nodiscard]] bool within(double tol) const { return std::abs(value) <= tol * partition; }
};

/// Residual, derivative, and partition sum with the largest exponent factored
/// out, so the evaluation never overflows. All three share the scale factor
/// exp(m), which cancels in Newton steps and in the drift ratio, and the
/// value's sign is preserved everywhere.
inline ScaledResidual scaled_residual(const std::vector<double>& d,
                                      const std::vector<double>& w, double h,
                                      std::vector<double>& scratch_v,
                                      std::vector<double>& scratch_d,
                                      std::vector<double>& scratch_p) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < d.size(); ++j)
    if (w[j] > 0.0) m = std::max(m, -h * d[j]);
  scratch_v.clear();
  scratch_d.clear();
  scratch_p.clear();
  for (std::size_t j = 0; j < d.size(); ++j) {
    if (w[j] <= 0.0) continue;
    const double e = w[j] * std::exp(-h * d[j] - m);
    scratch_v.push_back(d[j] * e);
    scratch_d.push_back(-d[j] * d[j] * e);
    scratch_p.push_back(e);
  }
  ScaledResidual r;
  r.value = pairwise_sum(scratch_v.data(), scratch_v.size());
  r.derivative = pairwise_sum(scratch_d.data(), scratch_d.size());
  r.partition = pairwise_sum(scratch_p.data(), scratch_p.size());
  return r;
}

}  // namespace detail

/// Scaled residual at h, sign-correct and overflow-safe; the root location is
/// that of the unscaled equation.
inline double phi(const RootProblem& p, double h) {
  p.validate();
  std::vector<double> sv, sd, sp;
  return detail::scaled_residual(p.displacements, p.weights, h, sv, sd, sp).value;
}

/// Solves the row equation: expands a bracket from the warm start by unit
/// steps of doubling width, bisects it to width 1e-8, then polishes with at
/// most 20 guarded Newton steps. Converged when the conditional drift — the
/// residual divided by the row's partition sum, evaluated with weights
/// normalized to unit mass so the criterion is scale-free — is within
/// tolerance, or the bracket is tighter than tolerance * max(1, |h|).
inline double solve_h(const RootProblem& p) {
  p.validate();
  const std::vector<double>& d = p.displacements;

  bool has_pos = false, has_neg = false;
  for (std::size_t j = 0; j < d.size(); ++j) {
    if (p.weights[j] <= 0.0) continue;
    if (d[j] > 0.0) has_pos = true;
    if (d[j] < 0.0) has_neg = true;
  }
  if (!has_pos || !has_neg)
    throw BracketFailure("solve_h: displacements carry weight on one side only; no root");

  // Unit-mass weights make the convergence criterion invariant under weight
  // scaling without moving the root.
  std::vector<double> w = p.weights;
  const double total = pairwise_sum(w.data(), w.size());
  for (double& x : w) x /= total;

  std::vector<double> sv, sd, sp;
  const auto eval = [&](double h) { return detail::scaled_residual(d, w, h, sv, sd, sp); };
  const double tol = p.tolerance;

  double h = p.warm_start;
  detail::ScaledResidual r = eval(h);
  if (r.within(tol)) return h;

  // Residual is decreasing: positive value means the root lies to the right.
  double lo, hi;  // invariant: residual(lo) > 0 > residual(hi)
  if (r.value > 0.0) {
    lo = h;
    double step = 1.0;
    for (;;) {
      hi = lo + step;
      if (std::abs(hi) > 1e6)
        throw BracketFailure("solve_h: no sign change within |h| <= 1e6");
      const auto rh = eval(hi);
      if (rh.within(tol)) return hi;
      if (rh.value < 0.0) break;
      lo = hi;
      step *= 2.0;
    }
  } else {
    hi = h;
    double step = 1.0;
    for (;;) {
      lo = hi - step;
      if (std::abs(lo) > 1e6)
        throw BracketFailure("solve_h: no sign change within |h| <= 1e6");
      const auto rl = eval(lo);
      if (rl.within(tol)) return lo;
      if (rl.value > 0.0) break;
      hi = lo;
      step *= 2.0;
    }
  }

  while (hi - lo > 1e-8) {
    const double mid = 0.5 * (lo + hi);
    const auto rm = eval(mid);
    if (rm.within(tol)) return mid;
    if (rm.value > 0.0)
      lo = mid;
    else
      hi = mid;
  }

  h = 0.5 * (lo + hi);
  for (int it = 0; it < 20; ++it) {
    r = eval(h);
    if (r.within(tol)) return h;
    if (r.value > 0.0)
      lo = std::max(lo, h);
    else
      hi = std::min(hi, h);
    if (hi - lo <= tol * std::max(1.0, std::abs(h))) return h;
    double next = r.derivative < 0.0 ? h - r.value / r.derivative : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);  // bisection fallback
    h = next;
  }
  return h;
}

}  // namespace emot
