#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <utility>
#include <vector>

#include "emot/errors.hpp"
#include "emot/measure.hpp"
#include "emot/numerics.hpp"
#include "emot/potentials.hpp"
#include "emot/problem.hpp"

namespace emot {

struct AscentConfig {
  std::size_t max_iters = 500000;
  double grad_tol = 1e-10;   // infinity norm of the dual gradient
  double armijo_c1 = 1e-4;
  double initial_step = 1.0;
  double min_step = 1e-18;   // line-search floor before giving up
  double overflow_guard = 700.0;
};

/// Maximizes the dual objective by simultaneous full-gradient ascent with
/// Armijo backtracking — a deliberately different algorithm family from the
/// coordinate sweep, so agreement between the two is meaningful evidence.
///
/// The gradient is (row_mass - mu, col_mass - nu, signed drift per row). The
/// Armijo test evaluates the objective *increment* directly via expm1 on the
/// per-cell exponent change, so acceptance stays exact even when the increment
/// is far below the absolute rounding noise of the objective itself; that lets
/// the search drive the gradient to ~1e-12 without stalling.
inline DualPotentials full_gradient_ascent(const ProblemInstance& inst,
                                           const DualPotentials& init,
                                           const AscentConfig& cfg = {}) {
  const std::size_t n = inst.mu.size(), m = inst.nu.size(), l = inst.rho.size();
  if (n > 50 || m > 50 || l > 10)
    throw ConfigError("full_gradient_ascent: instance exceeds the 50x50x10 size guard");
  init.validate(n, m);

  DualPotentials pot = init;
  std::vector<double> values, e1(n * m * l), terms(n * m * l);
  std::vector<double> gf(n), gg(m), gh(n), sq_terms, lin_terms;
  double step = cfg.initial_step;

  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    detail::fill_plan_values(inst, pot, cfg.overflow_guard, values);
    const detail::PlanBody body = detail::analyze_plan(inst, values);

    double grad_inf = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      gf[i] = body.row_mass[i] - inst.mu.weights[i];
      gh[i] = body.mart_signed[i];
      grad_inf = std::max({grad_inf, std::abs(gf[i]), std::abs(gh[i])});
    }
    for (std::size_t j = 0; j < m; ++j) {
      gg[j] = body.col_mass[j] - inst.nu.weights[j];
      grad_inf = std::max(grad_inf, std::abs(gg[j]));
    }
    if (grad_inf <= cfg.grad_tol) return normalize(pot, inst.mu, inst.nu);

    sq_terms.clear();
    lin_terms.clear();
    for (std::size_t i = 0; i < n; ++i) {
      sq_terms.push_back(gf[i] * gf[i] + gh[i] * gh[i]);
      lin_terms.push_back(gf[i] * inst.mu.weights[i]);
    }
    for (std::size_t j = 0; j < m; ++j) {
      sq_terms.push_back(gg[j] * gg[j]);
      lin_terms.push_back(gg[j] * inst.nu.weights[j]);
    }
    const double sq = pairwise_sum(sq_terms.data(), sq_terms.size());
    const double lin = pairwise_sum(lin_terms.data(), lin_terms.size());

    std::size_t t = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        const double e_row = gf[i] + gg[j] + gh[i] * (inst.nu.points[j] - inst.mu.points[i]);
        for (std::size_t k = 0; k < l; ++k, ++t) e1[t] = e_row;
      }

    // increment along the gradient: dG(a) = -sum pi*expm1(-a*e1) - a*lin
    double alpha = step;
    bool accepted = false;
    while (alpha >= cfg.min_step) {
      for (std::size_t u = 0; u < terms.size(); ++u)
        terms[u] = values[u] * std::expm1(-alpha * e1[u]);
      const double dg = -pairwise_sum(terms.data(), terms.size()) - alpha * lin;
      if (dg >= cfg.armijo_c1 * alpha * sq) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted)
      throw NoConvergence("full_gradient_ascent: line search stalled below the step floor");

    for (std::size_t i = 0; i < n; ++i) {
      pot.f[i] += alpha * gf[i];
      pot.h[i] += alpha * gh[i];
    }
    for (std::size_t j = 0; j < m; ++j) pot.g[j] += alpha * gg[j];
    step = std::min(alpha * 2.0, 1e6);
  }
  throw NoConvergence("full_gradient_ascent: iteration cap reached before the gradient tolerance");
}

/// First-order optimality residuals in conditional form: for each effective
/// row, |sum_jk exp(-c-f-g-h*dy) nu rho - 1| and the conditional drift
/// |sum_jk dy exp(-c-f-g-h*dy) nu rho|; for each effective column,
/// |sum_ik exp(-c-f-g-h*dy) mu rho - 1|. All three vanish exactly at the
/// dual optimum.
struct KktReport {
  double max_martingale_residual = 0.0;
  double max_x_marginal_residual = 0.0;
  double max_y_marginal_residual = 0.0;
  double tolerance = 0.0;
  bool passed = false;

  double max_residual() const {
    return std::max({max_martingale_residual, max_x_marginal_residual,
                     max_y_marginal_residual});
  }
};

inline KktReport check_first_order(const ProblemInstance& inst, const DualPotentials& pot,
                                   double tol = 1e-8) {
  const std::size_t n = inst.mu.size(), m = inst.nu.size(), l = inst.rho.size();
  pot.validate(n, m);
  KktReport rep;
  rep.tolerance = tol;

  std::vector<double> mass_terms, drift_terms;
  for (std::size_t i = 0; i < n; ++i) {
    if (inst.mu.weights[i] == 0.0) continue;
    mass_terms.clear();
    drift_terms.clear();
    for (std::size_t j = 0; j < m; ++j) {
      const double dy = inst.nu.points[j] - inst.mu.points[i];
      const double w_j = inst.nu.weights[j];
      if (w_j == 0.0) continue;
      for (std::size_t k = 0; k < l; ++k) {
        if (inst.rho.weights[k] == 0.0) continue;
        const double dens = std::exp(-inst.cost(i, j, k) - pot.f[i] - pot.g[j] -
                                     pot.h[i] * dy) *
                            w_j * inst.rho.weights[k];
        mass_terms.push_back(dens);
        drift_terms.push_back(dy * dens);
      }
    }
    rep.max_x_marginal_residual =
        std::max(rep.max_x_marginal_residual,
                 std::abs(pairwise_sum(mass_terms.data(), mass_terms.size()) - 1.0));
    rep.max_martingale_residual =
        std::max(rep.max_martingale_residual,
                 std::abs(pairwise_sum(drift_terms.data(), drift_terms.size())));
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (inst.nu.weights[j] == 0.0) continue;
    mass_terms.clear();
    const double yj = inst.nu.points[j];
    for (std::size_t i = 0; i < n; ++i) {
      const double w_i = inst.mu.weights[i];
      if (w_i == 0.0) continue;
      const double dy = yj - inst.mu.points[i];
      for (std::size_t k = 0; k < l; ++k) {
        if (inst.rho.weights[k] == 0.0) continue;
        mass_terms.push_back(std::exp(-inst.cost(i, j, k) - pot.f[i] - pot.g[j] -
                                      pot.h[i] * dy) *
                             w_i * inst.rho.weights[k]);
      }
    }
    rep.max_y_marginal_residual =
        std::max(rep.max_y_marginal_residual,
                 std::abs(pairwise_sum(mass_terms.data(), mass_terms.size()) - 1.0));
  }
  rep.passed = rep.max_residual() <= tol;
  return rep;
}

/// H(plan | Q) minus the certified dual lower bound. For any plan with exact
/// marginal and martingale feasibility this is >= 0, and it vanishes exactly
/// at the joint optimum; the lower bound carries the +1 that the generalized
/// entropy H contributes at unit total mass.
inline double duality_gap(const ProblemInstance& inst, const TransportPlan& plan,
                          const DualPotentials& pot) {
  return relative_entropy(plan, inst) - (dual_objective(inst, pot) + 1.0);
}

/// A solvable random instance plus an explicit interior feasible coupling.
struct RandomInstance {
  ProblemInstance instance;
  TransportPlan witness;  // strictly positive, exact marginals, zero drift
};

namespace detail {

/// Strictly increasing jittered grid of `count` points centered on [lo, hi].
inline std::vector<double> jittered_grid(std::mt19937_64& rng, std::size_t count, double lo,
                                         double hi) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> pts(count);
  if (count == 1) {
    pts[0] = 0.5 * (lo + hi) + 0.1 * (hi - lo) * u(rng);
    return pts;
  }
  const double w = (hi - lo) / static_cast<double>(count - 1);
  const double jit = std::min(0.3 * w, 0.18);
  for (std::size_t j = 0; j < count; ++j)
    pts[j] = lo + static_cast<double>(j) * w + jit * u(rng);
  return pts;
}

/// Dirichlet-style weights mixed with a uniform floor, normalized to unit sum.
inline std::vector<double> floored_dirichlet(std::mt19937_64& rng, std::size_t count) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> e(count);
  double total = 0.0;
  for (double& v : e) {
    v = -std::log1p(-u(rng));
    total += v;
  }
  std::vector<double> w(count);
  for (std::size_t i = 0; i < count; ++i)
    w[i] = 0.2 / static_cast<double>(count) + 0.8 * e[i] / total;
  const double s = pairwise_sum(w.data(), w.size());
  for (double& v : w) v /= s;
  return w;
}

}  // namespace detail

/// Draws a random instance of the requested shape from a base y grid strictly
/// straddling the x grid. The y marginal is the push-forward of mu through an
/// explicit martingale kernel (a two-point mean-preserving split mixed with a
/// tilted full-support kernel), so the pair is in convex order with matched
/// means by construction and the mixing kernel doubles as an interior feasible
/// witness coupling. Costs are i.i.d. uniform on [-1, 1].
inline RandomInstance random_instance(std::mt19937_64& rng, std::size_t n, std::size_t m,
                                      std::size_t l) {
  if (n < 1 || m < 2 || l < 1)
    throw ConfigError("random_instance: need n >= 1, m >= 2, l >= 1");
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::vector<double> y = detail::jittered_grid(rng, m, -1.2, 1.2);
  const std::vector<double> x = detail::jittered_grid(rng, n, -0.75, 0.75);
  std::vector<double> z(l);
  for (std::size_t k = 0; k < l; ++k) z[k] = 0.1 + 0.01 * static_cast<double>(k);

  DiscreteMeasure mu{x, detail::floored_dirichlet(rng, n)};
  DiscreteMeasure rho{z, detail::floored_dirichlet(rng, l)};

  DiscreteMeasure uniform_y{y, std::vector<double>(m, 1.0 / static_cast<double>(m))};
  std::vector<std::vector<double>> kernel(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t jl = 0, jr = m - 1;
    for (std::size_t j = 0; j < m; ++j)
      if (y[j] < x[i]) jl = j;
    for (std::size_t j = m; j-- > 0;)
      if (y[j] > x[i]) jr = j;
    const double wl = (y[jr] - x[i]) / (y[jr] - y[jl]);
    kernel[i] = tilt_to_mean(uniform_y, x[i]).weights;
    for (double& v : kernel[i]) v *= 0.1;
    kernel[i][jl] += 0.9 * wl;
    kernel[i][jr] += 0.9 * (1.0 - wl);
  }

  std::vector<double> nu_w(m);
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = mu.weights[i] * kernel[i][j];
    nu_w[j] = pairwise_sum(col.data(), col.size());
  }
  const double nu_total = pairwise_sum(nu_w.data(), nu_w.size());
  for (double& v : nu_w) v /= nu_total;
  DiscreteMeasure nu{y, nu_w};

  std::vector<double> cost_values(n * m * l);
  for (double& c : cost_values) c = 2.0 * unit(rng) - 1.0;
  CostTensor cost({n, m, l}, std::move(cost_values));

  RandomInstance out{ProblemInstance(std::move(mu), std::move(nu), std::move(rho),
                                     std::move(cost)),
                     TransportPlan{}};
  validate_instance(out.instance);

  std::vector<double> witness(n * m * l);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < l; ++k)
        witness[(i * m + j) * l + k] =
            out.instance.mu.weights[i] * kernel[i][j] * out.instance.rho.weights[k];
  detail::PlanBody body = detail::analyze_plan(out.instance, witness);
  out.witness = detail::assemble_plan(out.instance, std::move(witness), std::move(body));
  return out;
}

}  // namespace emot
