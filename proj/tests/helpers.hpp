#pragma once

// Shared fixtures and independent cross-check routines for the test suite.
// The checkers here deliberately use direct formulas and plain loops rather
// than the library's optimized paths, so agreement is evidence.

#include <cmath>
#include <cstddef>
#include <vector>

#include "emot/emot.hpp"

namespace testing_support {

/// 2x3x1 fixture: x = (-1, 1) with equal weights, y = (-2, 0, 2) with weights
/// (0.3, 0.4, 0.3) — strictly inside the convex-order cone, so the optimal
/// plan is interior — plus a fixed asymmetric bounded cost.
inline emot::ProblemInstance small_fixture() {
  emot::DiscreteMeasure mu{{-1.0, 1.0}, {0.5, 0.5}};
  emot::DiscreteMeasure nu{{-2.0, 0.0, 2.0}, {0.3, 0.4, 0.3}};
  emot::DiscreteMeasure rho{{0.15}, {1.0}};
  emot::CostTensor cost({2, 3, 1}, {0.3, -0.2, 0.5, -0.4, 0.1, -0.6});
  return emot::ProblemInstance(mu, nu, rho, cost);
}

/// Interior martingale coupling of the fixture marginals (row conditional
/// means equal x): rows (0.275, 0.2, 0.025) and (0.025, 0.2, 0.275).
inline std::vector<double> fixture_martingale_coupling() {
  return {0.275, 0.2, 0.025, 0.025, 0.2, 0.275};
}

/// Instance whose reference measure is itself that martingale coupling:
/// c_ij = -log(pi_ij / (mu_i nu_j)), so exp(-c) mu nu rho == pi and the
/// solver's optimum is the reference itself with value -1.
inline emot::ProblemInstance reference_is_feasible_fixture() {
  emot::DiscreteMeasure mu{{-1.0, 1.0}, {0.5, 0.5}};
  emot::DiscreteMeasure nu{{-2.0, 0.0, 2.0}, {0.3, 0.4, 0.3}};
  emot::DiscreteMeasure rho{{0.15}, {1.0}};
  const std::vector<double> pi = fixture_martingale_coupling();
  std::vector<double> c(6);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      c[i * 3 + j] = -std::log(pi[i * 3 + j] / (mu.weights[i] * nu.weights[j]));
  return emot::ProblemInstance(mu, nu, rho, emot::CostTensor({2, 3, 1}, std::move(c)));
}

/// Direct triple-loop dual objective in long double, no pairwise tricks.
inline double brute_force_dual_objective(const emot::ProblemInstance& inst,
                                         const emot::DualPotentials& pot) {
  const std::size_t n = inst.mu.size(), m = inst.nu.size(), l = inst.rho.size();
  long double z = 0.0L;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < l; ++k) {
        const long double e = -static_cast<long double>(inst.cost(i, j, k)) - pot.f[i] -
                              pot.g[j] -
                              static_cast<long double>(pot.h[i]) *
                                  (inst.nu.points[j] - inst.mu.points[i]);
        z += std::exp(static_cast<double>(e)) *
             (inst.mu.weights[i] * inst.nu.weights[j] * inst.rho.weights[k]);
      }
  long double lin = 0.0L;
  for (std::size_t i = 0; i < n; ++i) lin += static_cast<long double>(pot.f[i]) * inst.mu.weights[i];
  for (std::size_t j = 0; j < m; ++j) lin += static_cast<long double>(pot.g[j]) * inst.nu.weights[j];
  return static_cast<double>(-z - lin);
}

/// Direct relative entropy sum(p log(p/q)) against the instance reference,
/// plain accumulation.
inline double brute_force_relative_entropy(const emot::ProblemInstance& inst,
                                           const std::vector<double>& plan_values) {
  const std::size_t n = inst.mu.size(), m = inst.nu.size(), l = inst.rho.size();
  long double acc = 0.0L;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < l; ++k) {
        const double p = plan_values[(i * m + j) * l + k];
        if (p <= 0.0) continue;
        const double q = emot::reference_measure_density(inst, i, j, k);
        acc += static_cast<long double>(p) * std::log(p / q);
      }
  return static_cast<double>(acc);
}

/// Convex-order check by direct enumeration of call values at every grid
/// point of both measures (plus means), independent of the library's check.
inline bool in_convex_order(const emot::DiscreteMeasure& mu, const emot::DiscreteMeasure& nu,
                            double tol) {
  if (std::abs(mu.mean() - nu.mean()) > tol) return false;
  std::vector<double> strikes = mu.points;
  strikes.insert(strikes.end(), nu.points.begin(), nu.points.end());
  for (double k : strikes)
    if (emot::call_value(mu, k) > emot::call_value(nu, k) + tol) return false;
  return true;
}

/// Plain bisection for the row equation sum_j d_j w_j exp(-h d_j) = 0 on a
/// caller-supplied bracket; used to cross-check the production root solver.
inline double bisect_root(const std::vector<double>& d, const std::vector<double>& w,
                          double lo, double hi, double tol) {
  const auto phi = [&](double h) {
    long double s = 0.0L;
    for (std::size_t j = 0; j < d.size(); ++j)
      s += static_cast<long double>(d[j]) * w[j] * std::exp(-h * d[j]);
    return static_cast<double>(s);
  };
  double flo = phi(lo);
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = phi(mid);
    if ((flo > 0.0) == (fm > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace testing_support
