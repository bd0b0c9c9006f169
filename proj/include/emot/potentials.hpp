#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "emot/errors.hpp"
#include "emot/numerics.hpp"
#include "emot/problem.hpp"

namespace emot {

/// Dual variables of the transport problem: f prices the x-marginal
/// constraint, g the y-marginal constraint, h the martingale constraint
/// (per x point, multiplying the increment y - x). Dimensionless log-density
/// units.
struct DualPotentials {
  std::vector<double> f;
  std::vector<double> g;
  std::vector<double> h;

  static DualPotentials zeros(std::size_t n, std::size_t m) {
    return {std::vector<double>(n, 0.0), std::vector<double>(m, 0.0),
            std::vector<double>(n, 0.0)};
  }

  void validate(std::size_t n, std::size_t m) const {
    if (f.size() != n || h.size() != n || g.size() != m)
      throw std::invalid_argument("potentials: size mismatch with grids");
    for (const auto* v : {&f, &g, &h})
      for (double x : *v)
        if (!std::isfinite(x)) throw std::invalid_argument("potentials: non-finite entry");
  }

  /// Gauge condition: both weighted sums vanish within tol.
  [[nodiscard]] bool normalized(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                double tol = 1e-10) const {
    std::vector<double> t(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) t[j] = g[j] * nu.weights[j];
    const double lg = pairwise_sum(t.data(), t.size());
    t.resize(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) t[i] = h[i] * mu.weights[i];
    const double lh = pairwise_sum(t.data(), h.size());
    return std::abs(lg) <= tol && std::abs(lh) <= tol;
  }
};

/// A coupling on the x-y-z product grid together with its feasibility
/// diagnostics. Row-major in (i, j, k) like the cost tensor.
struct TransportPlan {
  std::array<std::size_t, 3> shape{0, 0, 0};
  std::vector<double> values;
  double total_mass = 0.0;
  double x_marginal_error = 0.0;  // max_i |row mass - mu_i|
  double y_marginal_error = 0.0;  // max_j |column mass - nu_j|
  std::vector<double> row_mass;
  std::vector<double> col_mass;
  std::vector<double> martingale_abs;  // |sum_jk (y_j - x_i) pi| per i
  std::vector<double> martingale_rel;  // above / (mu_i * y-grid span)
  double max_martingale_rel = 0.0;     // over effective rows

  [[nodiscard]] double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return values[(i * shape[1] + j) * shape[2] + k];
  }
};

namespace detail {

/// Materializes the Gibbs plan exp(-c - f - g - h(y-x)) * mu x nu x rho.
/// Zero-weight cells are written as exact zeros without touching exp; any
/// weighted cell whose exponent exceeds the guard aborts.
inline void fill_plan_values(const ProblemInstance& inst, const DualPotentials& pot,
                             double overflow_guard, std::vector<double>& out) {
  const std::size_t n = inst.mu.size(), m = inst.nu.size(), l = inst.rho.size();
  out.resize(n * m * l);
  std::size_t idx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = inst.mu.points[i];
    const double mu_i = inst.mu.weights[i];
    for (std::size_t j = 0; j < m; ++j) {
      const double dy = inst.nu.points[j] - xi;
      const double base = -pot.f[i] - pot.g[j] - pot.h[i] * dy;
      const double w_ij = mu_i * inst.nu.weights[j];
      for (std::size_t k = 0; k < l; ++k, ++idx) {
        const double w = w_ij * inst.rho.weights[k];
        if (w == 0.0) {
          out[idx] = 0.0;
          continue;
        }
        const double e = base - inst.cost.values[idx];
        if (e > overflow_guard) {
          std::ostringstream os;
          os << "overflow: exponent " << e << " above guard " << overflow_guard
             << " at cell (" << i << ", " << j << ", " << k << ")";
          throw Overflow(os.str());
        }
        out[idx] = std::exp(e) * w;
      }
    }
  }
}

/// Marginal, mass, and martingale diagnostics of a materialized plan.
struct PlanBody {
  double total_mass = 0.0;
  double x_err = 0.0;
  double y_err = 0.0;
  std::vector<double> row_mass;
  std::vector<double> col_mass;
  std::vector<double> mart_signed;  // sum_jk (y_j - x_i) pi, per i
  std::vector<double> mart_rel;     // |signed| / (mu_i * y span); 0 off support
  double max_mart_rel = 0.0;
};

inline PlanBody analyze_plan(const ProblemInstance& inst, const std::vector<double>& values) {
  const std::size_t n = inst.mu.size(), m = inst.nu.size(), l = inst.rho.size();
  PlanBody b;
  b.row_mass.resize(n);
  b.col_mass.resize(m);
  b.mart_signed.resize(n);
  b.mart_rel.resize(n);
  const double y_span = inst.nu.span();
  std::vector<double> scratch;
  scratch.reserve(std::max(m * l, n * l));

  for (std::size_t i = 0; i < n; ++i) {
    const double* row = values.data() + i * m * l;
    b.row_mass[i] = pairwise_sum(row, m * l);
    b.x_err = std::max(b.x_err, std::abs(b.row_mass[i] - inst.mu.weights[i]));
    scratch.clear();
    const double xi = inst.mu.points[i];
    for (std::size_t j = 0; j < m; ++j) {
      const double dy = inst.nu.points[j] - xi;
      for (std::size_t k = 0; k < l; ++k) scratch.push_back(dy * row[j * l + k]);
    }
    b.mart_signed[i] = pairwise_sum(scratch.data(), scratch.size());
    if (inst.mu.weights[i] > 0.0) {
      b.mart_rel[i] = std::abs(b.mart_signed[i]) / (inst.mu.weights[i] * y_span);
      b.max_mart_rel = std::max(b.max_mart_rel, b.mart_rel[i]);
    } else {
      b.mart_rel[i] = 0.0;
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    scratch.clear();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < l; ++k) scratch.push_back(values[(i * m + j) * l + k]);
    b.col_mass[j] = pairwise_sum(scratch.data(), scratch.size());
    b.y_err = std::max(b.y_err, std::abs(b.col_mass[j] - inst.nu.weights[j]));
  }
  b.total_mass = pairwise_sum(values.data(), values.size());
  return b;
}

inline TransportPlan assemble_plan(const ProblemInstance& inst, std::vector<double>&& values,
                                   PlanBody&& body) {
  TransportPlan plan;
  plan.shape = {inst.mu.size(), inst.nu.size(), inst.rho.size()};
  plan.values = std::move(values);
  plan.total_mass = body.total_mass;
  plan.x_marginal_error = body.x_err;
  plan.y_marginal_error = body.y_err;
  plan.row_mass = std::move(body.row_mass);
  plan.col_mass = std::move(body.col_mass);
  plan.martingale_abs.resize(body.mart_signed.size());
  for (std::size_t i = 0; i < body.mart_signed.size(); ++i)
    plan.martingale_abs[i] = std::abs(body.mart_signed[i]);
  plan.martingale_rel = std::move(body.mart_rel);
  plan.max_martingale_rel = body.max_mart_rel;
  return plan;
}

}  // namespace detail

/// The plan induced by the potentials, with diagnostics. Throws Overflow if
/// any weighted cell's exponent exceeds the guard.
inline TransportPlan induced_plan(const ProblemInstance& inst, const DualPotentials& pot,
                                  double overflow_guard = 700.0) {
  pot.validate(inst.mu.size(), inst.nu.size());
  std::vector<double> values;
  detail::fill_plan_values(inst, pot, overflow_guard, values);
  auto body = detail::analyze_plan(inst, values);
  return detail::assemble_plan(inst, std::move(values), std::move(body));
}

/// Dual objective G = -Z - sum_i f_i mu_i - sum_j g_j nu_j, where Z is the
/// total mass of the induced plan. All reductions are cascade sums.
inline double dual_objective(const ProblemInstance& inst, const DualPotentials& pot,
                             double overflow_guard = 700.0) {
  pot.validate(inst.mu.size(), inst.nu.size());
  std::vector<double> values;
  detail::fill_plan_values(inst, pot, overflow_guard, values);
  const double z = pairwise_sum(values.data(), values.size());
  std::vector<double> t(inst.mu.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = pot.f[i] * inst.mu.weights[i];
  const double lin_f = pairwise_sum(t.data(), t.size());
  t.resize(inst.nu.size());
  for (std::size_t j = 0; j < t.size(); ++j) t[j] = pot.g[j] * inst.nu.weights[j];
  const double lin_g = pairwise_sum(t.data(), t.size());
  return -z - lin_f - lin_g;
}

/// The two-parameter gauge family that leaves the induced plan unchanged:
/// (f + c1 - c2 x, g - c1 + c2 y, h - c2).
inline DualPotentials apply_invariant_transform(const DualPotentials& pot, double c1,
                                                double c2, const std::vector<double>& x,
                                                const std::vector<double>& y) {
  DualPotentials out = pot;
  for (std::size_t i = 0; i < out.f.size(); ++i) out.f[i] = pot.f[i] + c1 - c2 * x[i];
  for (std::size_t j = 0; j < out.g.size(); ++j) out.g[j] = pot.g[j] - c1 + c2 * y[j];
  for (std::size_t i = 0; i < out.h.size(); ++i) out.h[i] = pot.h[i] - c2;
  return out;
}

/// Gauge fixing: picks the transform that zeroes both weighted sums,
/// c2 = sum_i h_i mu_i and c1 = sum_j g_j nu_j + c2 * E_nu[y] (the coupling
/// term vanishes on mean-centered grids, recovering the plain shift).
inline DualPotentials normalize(const DualPotentials& pot, const DiscreteMeasure& mu,
                                const DiscreteMeasure& nu) {
  std::vector<double> t(pot.g.size());
  for (std::size_t j = 0; j < pot.g.size(); ++j) t[j] = pot.g[j] * nu.weights[j];
  const double lambda_g = pairwise_sum(t.data(), t.size());
  t.resize(pot.h.size());
  for (std::size_t i = 0; i < pot.h.size(); ++i) t[i] = pot.h[i] * mu.weights[i];
  const double lambda_h = pairwise_sum(t.data(), pot.h.size());
  const double c1 = lambda_g + lambda_h * nu.mean();
  return apply_invariant_transform(pot, c1, lambda_h, mu.points, nu.points);
}

/// Relative entropy H(plan | Q) of a plan against the instance's Gibbs
/// reference, with 0 log 0 = 0. Throws NotAbsolutelyContinuous if the plan
/// puts mass on a cell whose product weight vanishes.
inline double relative_entropy(const TransportPlan& plan, const ProblemInstance& inst) {
  const std::size_t n = inst.mu.size(), m = inst.nu.size(), l = inst.rho.size();
  if (plan.shape != std::array<std::size_t, 3>{n, m, l})
    throw std::invalid_argument("relative_entropy: plan shape mismatch");
  std::vector<double> terms;
  terms.reserve(plan.values.size());
  std::size_t idx = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < l; ++k, ++idx) {
        const double p = plan.values[idx];
        if (p == 0.0) continue;
        const double w =
            inst.mu.weights[i] * inst.nu.weights[j] * inst.rho.weights[k];
        if (w == 0.0)
          throw NotAbsolutelyContinuous("plan has mass where the reference has none");
        // log(p / (exp(-c) w)) = log p + c - log w
        terms.push_back(p * (std::log(p) + inst.cost.values[idx] - std::log(w)));
      }
  return pairwise_sum(terms.data(), terms.size());
}

/// Total variation distance (1/2 L1) between two plans of equal shape.
inline double plan_total_variation(const TransportPlan& a, const TransportPlan& b) {
  if (a.shape != b.shape) throw std::invalid_argument("plan TV: shape mismatch");
  std::vector<double> t(a.values.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::abs(a.values[i] - b.values[i]);
  return 0.5 * pairwise_sum(t.data(), t.size());
}

}  // namespace emot
