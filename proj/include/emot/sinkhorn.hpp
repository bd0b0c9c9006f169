#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "emot/errors.hpp"
#include "emot/numerics.hpp"
#include "emot/potentials.hpp"
#include "emot/problem.hpp"
#include "emot/root_solver.hpp"

namespace emot {

struct SolverConfig {
  std::size_t max_iters = 1000;
  double g_tol = 1e-12;          // dual-increment stop threshold
  double marginal_tol = 1e-9;    // absolute, on the x marginal after a full sweep
  double martingale_tol = 1e-6;  // relative (per-row residual / (mu_i * y span))
  double root_tolerance = 1e-12;
  double overflow_guard = 700.0;
  std::size_t trace_every = 1;
};

struct TraceRecord {
  std::size_t iter = 0;
  double g_value = 0.0;
  double x_err = 0.0;
  double y_err = 0.0;
  double mart_rel = 0.0;
  double max_f = 0.0;
  double max_g = 0.0;
  double max_h = 0.0;
  double wall_ms = 0.0;
};

/// Per-iteration diagnostics. G values are non-decreasing across records
/// (within 1e-12 slack); the max-|potential| columns monitor the uniform
/// boundedness the theory guarantees on feasible instances.
struct SolveTrace {
  std::vector<TraceRecord> records;
};

enum class Termination { converged, max_iters, infeasible_suspect };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_iters: return "max_iters";
    default: return "infeasible_suspect";
  }
}

struct SolveResult {
  DualPotentials potentials;  // normalized
  TransportPlan plan;
  SolveTrace trace;
  Termination reason = Termination::max_iters;
  std::size_t iterations = 0;
  std::string abort_message;  // set when reason == infeasible_suspect
};

/// Solves the per-row martingale equation for every effective x point:
/// h_i zeroes sum_j (y_j - x_i) w_ij exp(-h (y_j - x_i)) with row weights
/// w_ij = nu_j exp(-g_j) sum_k exp(-c_ijk) rho_k. The row residual does not
/// involve f (it cancels), and each row is warm-started from h_warm; rows
/// with mu_i = 0 carry h_warm over unchanged.
///
/// Row weights are assembled in log space with the row maximum subtracted,
/// which cannot overflow and leaves the root untouched.
inline std::vector<double> h_step(const ProblemInstance& inst, const std::vector<double>& g,
                                  const std::vector<double>& h_warm,
                                  double root_tolerance = 1e-12) {
  const std::size_t n = inst.mu.size(), m = inst.nu.size(), l = inst.rho.size();
  std::vector<double> h_out = h_warm;
  std::vector<double> log_w(m), scratch;
  RootProblem row;
  row.tolerance = root_tolerance;
  row.displacements.resize(m);
  row.weights.resize(m);
  for (std::size_t i = 0; i < n; ++i) {
    if (inst.mu.weights[i] == 0.0) continue;
    const double xi = inst.mu.points[i];
    double row_max = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      row.displacements[j] = inst.nu.points[j] - xi;
      if (inst.nu.weights[j] == 0.0) {
        log_w[j] = -std::numeric_limits<double>::infinity();
        continue;
      }
      scratch.clear();
      for (std::size_t k = 0; k < l; ++k)
        if (inst.rho.weights[k] > 0.0)
          scratch.push_back(inst.rho.weights[k] * std::exp(-inst.cost(i, j, k)));
      log_w[j] = std::log(inst.nu.weights[j]) - g[j] +
                 std::log(pairwise_sum(scratch.data(), scratch.size()));
      row_max = std::max(row_max, log_w[j]);
    }
    for (std::size_t j = 0; j < m; ++j)
      row.weights[j] = std::isfinite(log_w[j]) ? std::exp(log_w[j] - row_max) : 0.0;
    row.warm_start = h_warm[i];
    h_out[i] = solve_h(row);
  }
  return h_out;
}

/// Closed-form f update: f_i = log sum_jk exp(-c_ijk - g_j - h_i (y_j - x_i))
/// nu_j rho_k. Afterwards the x marginal of the induced plan equals mu to
/// floating-point accuracy.
inline std::vector<double> f_step(const ProblemInstance& inst, const std::vector<double>& g,
                                  const std::vector<double>& h_tilde) {
  const std::size_t n = inst.mu.size(), m = inst.nu.size(), l = inst.rho.size();
  std::vector<double> f_out(n);
  std::vector<double> exps(m * l), wts(m * l), scratch;
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = inst.mu.points[i];
    std::size_t t = 0;
    for (std::size_t j = 0; j < m; ++j) {
      const double dy = inst.nu.points[j] - xi;
      const double base = -g[j] - h_tilde[i] * dy;
      const double w_j = inst.nu.weights[j];
      for (std::size_t k = 0; k < l; ++k, ++t) {
        exps[t] = base - inst.cost(i, j, k);
        wts[t] = w_j * inst.rho.weights[k];
      }
    }
    f_out[i] = log_sum_exp_weighted(exps, wts, scratch);
  }
  return f_out;
}

/// Closed-form g update, the y-marginal mirror of f_step.
inline std::vector<double> g_step(const ProblemInstance& inst,
                                  const std::vector<double>& f_tilde,
                                  const std::vector<double>& h_tilde) {
  const std::size_t n = inst.mu.size(), m = inst.nu.size(), l = inst.rho.size();
  std::vector<double> g_out(m);
  std::vector<double> exps(n * l), wts(n * l), scratch;
  for (std::size_t j = 0; j < m; ++j) {
    const double yj = inst.nu.points[j];
    std::size_t t = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dy = yj - inst.mu.points[i];
      const double base = -f_tilde[i] - h_tilde[i] * dy;
      const double w_i = inst.mu.weights[i];
      for (std::size_t k = 0; k < l; ++k, ++t) {
        exps[t] = base - inst.cost(i, j, k);
        wts[t] = w_i * inst.rho.weights[k];
      }
    }
    g_out[j] = log_sum_exp_weighted(exps, wts, scratch);
  }
  return g_out;
}

namespace detail {

inline double linear_term(const std::vector<double>& v, const std::vector<double>& w) {
  std::vector<double> t(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) t[i] = v[i] * w[i];
  return pairwise_sum(t.data(), t.size());
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace detail

/// Runs the martingale Sinkhorn sweep h -> f -> g -> normalize until the
/// x-marginal error, the relative martingale residual, and the dual increment
/// are all within tolerance, or max_iters is reached. Overflow or a failed
/// root bracket aborts with the partial trace attached (infeasible-suspect).
inline SolveResult iterate(const ProblemInstance& inst, const DualPotentials& init,
                           const SolverConfig& cfg = {}) {
  init.validate(inst.mu.size(), inst.nu.size());
  const auto t0 = std::chrono::steady_clock::now();
  const auto wall_ms = [&t0] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  SolveResult res;
  DualPotentials pot = init;
  std::vector<double> values;
  double prev_g_value;
  try {
    detail::fill_plan_values(inst, pot, cfg.overflow_guard, values);
    const double z = pairwise_sum(values.data(), values.size());
    prev_g_value = -z - detail::linear_term(pot.f, inst.mu.weights) -
                   detail::linear_term(pot.g, inst.nu.weights);
  } catch (const Overflow& e) {
    res.potentials = pot;
    res.reason = Termination::infeasible_suspect;
    res.abort_message = e.what();
    return res;
  }

  detail::PlanBody body;
  DualPotentials pot_good = pot;  // last potentials with a finite induced plan
  for (std::size_t t = 1; t <= cfg.max_iters; ++t) {
    try {
      std::vector<double> h_tilde = h_step(inst, pot.g, pot.h, cfg.root_tolerance);
      std::vector<double> f_tilde = f_step(inst, pot.g, h_tilde);
      std::vector<double> g_tilde = g_step(inst, f_tilde, h_tilde);
      pot = normalize({std::move(f_tilde), std::move(g_tilde), std::move(h_tilde)}, inst.mu,
                      inst.nu);
      detail::fill_plan_values(inst, pot, cfg.overflow_guard, values);
      pot_good = pot;
    } catch (const Error& e) {
      res.reason = Termination::infeasible_suspect;
      res.abort_message = e.what();
      break;
    }
    body = detail::analyze_plan(inst, values);
    const double g_value = -body.total_mass - detail::linear_term(pot.f, inst.mu.weights) -
                           detail::linear_term(pot.g, inst.nu.weights);
    res.iterations = t;

    const bool converged = body.x_err <= cfg.marginal_tol &&
                           body.max_mart_rel <= cfg.martingale_tol &&
                           std::abs(g_value - prev_g_value) <= cfg.g_tol;
    prev_g_value = g_value;

    if (t % cfg.trace_every == 0 || converged || t == cfg.max_iters) {
      TraceRecord rec;
      rec.iter = t;
      rec.g_value = g_value;
      rec.x_err = body.x_err;
      rec.y_err = body.y_err;
      rec.mart_rel = body.max_mart_rel;
      rec.max_f = detail::max_abs(pot.f);
      rec.max_g = detail::max_abs(pot.g);
      rec.max_h = detail::max_abs(pot.h);
      rec.wall_ms = wall_ms();
      res.trace.records.push_back(rec);
    }
    if (converged) {
      res.reason = Termination::converged;
      break;
    }
  }

  if (res.reason == Termination::infeasible_suspect) {
    res.potentials = pot_good;
    try {
      detail::fill_plan_values(inst, pot_good, cfg.overflow_guard, values);
      body = detail::analyze_plan(inst, values);
    } catch (const Error&) {
      res.plan = TransportPlan{};
      return res;
    }
  } else {
    res.potentials = pot;
  }
  res.plan = detail::assemble_plan(inst, std::move(values), std::move(body));
  return res;
}

/// Convergence-rate fit from a solve trace.
struct RateFit {
  double rate = 0.0;       // decay exponent per iteration; positive = converging
  double r_squared = 0.0;  // of the log-linear fit
  std::size_t points_used = 0;
  double epsilon_floor = 0.0;
};

/// Fits log(G_best - G_n + eps_floor) ~ n over the pre-floor prefix of the
/// trace, where eps_floor = max(1e-14, the final recorded G increment) and the
/// prefix keeps records with G_best - G_n > 10 * eps_floor. Needs at least 10
/// such records.
inline RateFit fit_convergence_rate(const SolveTrace& trace) {
  const auto& rec = trace.records;
  if (rec.size() < 2) throw InsufficientTrace("rate fit: fewer than 2 trace records");
  double g_best = rec[0].g_value;
  for (const auto& r : rec) g_best = std::max(g_best, r.g_value);
  RateFit out;
  out.epsilon_floor =
      std::max(1e-14, rec[rec.size() - 1].g_value - rec[rec.size() - 2].g_value);

  std::vector<double> xs, ys;
  for (const auto& r : rec) {
    const double gap = g_best - r.g_value;
    if (!(gap > 10.0 * out.epsilon_floor)) break;  // entered the residual floor
    xs.push_back(static_cast<double>(r.iter));
    ys.push_back(std::log(gap + out.epsilon_floor));
  }
  if (xs.size() < 10)
    throw InsufficientTrace("rate fit: fewer than 10 records before the residual floor");
  const LineFit fit = fit_line(xs, ys);
  out.rate = -fit.slope;
  out.r_squared = fit.r_squared;
  out.points_used = xs.size();
  return out;
}

}  // namespace emot
