#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "emot/cost_tensor.hpp"
#include "emot/errors.hpp"
#include "emot/measure.hpp"

namespace emot {

/// One transport problem: marginal mu on the x grid, marginal nu on the
/// y grid, auxiliary measure rho on the z grid, and the reference cost
/// tensor shaped (|x|, |y|, |z|).
struct ProblemInstance {
  DiscreteMeasure mu;
  DiscreteMeasure nu;
  DiscreteMeasure rho;
  CostTensor cost;

  ProblemInstance() = default;
  ProblemInstance(DiscreteMeasure mu_, DiscreteMeasure nu_, DiscreteMeasure rho_,
                  CostTensor cost_)
      : mu(std::move(mu_)), nu(std::move(nu_)), rho(std::move(rho_)), cost(std::move(cost_)) {
    if (cost.shape[0] != mu.size() || cost.shape[1] != nu.size() || cost.shape[2] != rho.size())
      throw std::invalid_argument("instance: cost shape does not match grid sizes");
  }

  /// Extent of the smallest interval covering both price grids; the scale
  /// used for every span-relative tolerance.
  [[nodiscard]] double grid_span() const {
    return std::max(mu.points.back(), nu.points.back()) -
           std::min(mu.points.front(), nu.points.front());
  }
};

/// What the feasibility screen found. The first three checks are hard
/// requirements; the convex-order check is advisory only (histogram noise can
/// break it even when a near-feasible coupling exists).
struct FeasibilityReport {
  bool straddle_ok = false;
  bool mean_ok = false;
  bool nu_nondegenerate = false;
  bool convex_order_ok = false;
  double mean_gap = 0.0;
  double mean_tolerance = 0.0;
  double max_convex_order_violation = 0.0;

  [[nodiscard]] bool hard_ok() const { return straddle_ok && mean_ok && nu_nondegenerate; }
};

/// Hard feasibility failure; carries the full report for serialization.
class InfeasibilityError : public Error {
 public:
  InfeasibilityError(const std::string& what, FeasibilityReport rep)
      : Error(what), report(rep) {}
  FeasibilityReport report;
};

/// Effective y support does not strictly straddle the effective x support.
class InfeasibleSupport : public InfeasibilityError {
 public:
  using InfeasibilityError::InfeasibilityError;
};

/// Marginal means disagree beyond tolerance; no martingale coupling exists.
class MeanMismatch : public InfeasibilityError {
 public:
  using InfeasibilityError::InfeasibilityError;
};

/// nu needs at least two effective points to straddle anything.
class DegenerateNu : public InfeasibilityError {
 public:
  using InfeasibilityError::InfeasibilityError;
};

/// Screens an instance for martingale-transport feasibility.
///
/// Checks, in order: (a) every effective x point lies strictly inside the
/// effective y range, (b) |E_mu[x] - E_nu[y]| <= mean_tol_rel * grid span,
/// (c) nu has >= 2 effective points, (d) advisory convex-order dominance
/// E_nu[(y-k)^+] >= E_mu[(x-k)^+] at every grid point k. Throws
/// InfeasibleSupport / MeanMismatch / DegenerateNu on hard failures; the
/// thrown report (and the returned one) always carries all four results.
inline FeasibilityReport validate_instance(const ProblemInstance& inst,
                                           double mean_tol_rel = 1e-9) {
  FeasibilityReport rep;
  const double span = inst.grid_span();

  const double x_lo = inst.mu.min_effective_point();
  const double x_hi = inst.mu.max_effective_point();
  const double y_lo = inst.nu.min_effective_point();
  const double y_hi = inst.nu.max_effective_point();
  rep.straddle_ok = y_lo < x_lo && x_hi < y_hi;

  rep.mean_gap = std::abs(inst.mu.mean() - inst.nu.mean());
  rep.mean_tolerance = mean_tol_rel * span;
  rep.mean_ok = rep.mean_gap <= rep.mean_tolerance;

  rep.nu_nondegenerate = inst.nu.effective_count() >= 2;

  rep.convex_order_ok = true;
  std::vector<double> strikes = inst.mu.points;
  strikes.insert(strikes.end(), inst.nu.points.begin(), inst.nu.points.end());
  for (double k : strikes) {
    const double violation = call_value(inst.mu, k) - call_value(inst.nu, k);
    rep.max_convex_order_violation = std::max(rep.max_convex_order_violation, violation);
  }
  rep.convex_order_ok = rep.max_convex_order_violation <= 1e-9 * span;

  if (!rep.straddle_ok) {
    std::ostringstream os;
    os << "infeasible support: effective y range [" << y_lo << ", " << y_hi
       << "] does not strictly straddle effective x range [" << x_lo << ", " << x_hi << "]";
    throw InfeasibleSupport(os.str(), rep);
  }
  if (!rep.mean_ok) {
    std::ostringstream os;
    os << "mean mismatch: |E[x] - E[y]| = " << rep.mean_gap << " exceeds tolerance "
       << rep.mean_tolerance;
    throw MeanMismatch(os.str(), rep);
  }
  if (!rep.nu_nondegenerate)
    throw DegenerateNu("degenerate nu: fewer than two effective points", rep);
  return rep;
}

/// An instance translated so the common mean sits at zero, plus the shift
/// that undoes it.
struct CenteredInstance {
  ProblemInstance instance;
  double shift = 0.0;
};

/// Translates both price grids by -E_mu[x]. Shifts below 1e-12 of the grid
/// span are snapped to zero, which makes repeated centering a no-op. The z
/// grid, all weights, and the cost values are untouched.
inline CenteredInstance center_means(const ProblemInstance& inst) {
  const double m = inst.mu.mean();
  if (std::abs(m) <= 1e-12 * inst.grid_span()) return {inst, 0.0};
  ProblemInstance shifted = inst;
  for (double& x : shifted.mu.points) x -= m;
  for (double& y : shifted.nu.points) y -= m;
  return {std::move(shifted), m};
}

/// Undoes center_means: translates both price grids by +shift.
inline ProblemInstance translate_price_grids(const ProblemInstance& inst, double shift) {
  ProblemInstance out = inst;
  for (double& x : out.mu.points) x += shift;
  for (double& y : out.nu.points) y += shift;
  return out;
}

/// Density of the Gibbs reference measure Q at cell (i, j, k):
/// exp(-c_ijk) * mu_i * nu_j * rho_k.
inline double reference_measure_density(const ProblemInstance& inst, std::size_t i,
                                        std::size_t j, std::size_t k) {
  return std::exp(-inst.cost(i, j, k)) * inst.mu.weights[i] * inst.nu.weights[j] *
         inst.rho.weights[k];
}

}  // namespace emot
