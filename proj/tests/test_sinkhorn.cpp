#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "helpers.hpp"

using namespace emot;

TEST_CASE("a feasible reference is a fixed point reached in one sweep") {
  const ProblemInstance inst = testing_support::reference_is_feasible_fixture();
  const DualPotentials zero = DualPotentials::zeros(inst.mu.size(), inst.nu.size());
  const TransportPlan reference = induced_plan(inst, zero);

  const SolveResult res = iterate(inst, zero);
  REQUIRE(res.reason == Termination::converged);
  REQUIRE(res.iterations == 1);
  REQUIRE(res.trace.records.size() == 1);
  REQUIRE(res.trace.records[0].g_value == Catch::Approx(-1.0).margin(1e-12));
  REQUIRE(plan_total_variation(res.plan, reference) <= 1e-12);
  REQUIRE(res.plan.max_martingale_rel <= 1e-12);
  REQUIRE(res.plan.x_marginal_error <= 1e-12);
}

TEST_CASE("solver matches the independent ascent oracle on the fixture") {
  const ProblemInstance inst = testing_support::small_fixture();
  const SolveResult res = iterate(inst, DualPotentials::zeros(2, 3));
  REQUIRE(res.reason == Termination::converged);
  REQUIRE(res.plan.x_marginal_error <= 1e-9);
  REQUIRE(res.plan.max_martingale_rel <= 1e-6);
  REQUIRE(res.potentials.normalized(inst.mu, inst.nu, 1e-10));

  AscentConfig ocfg;
  ocfg.grad_tol = 1e-11;
  const DualPotentials opt = full_gradient_ascent(inst, DualPotentials::zeros(2, 3), ocfg);
  const double g_solver = dual_objective(inst, res.potentials);
  const double g_oracle = dual_objective(inst, opt);
  REQUIRE(std::abs(g_solver - g_oracle) <= 1e-8);
  REQUIRE(plan_total_variation(res.plan, induced_plan(inst, opt)) <= 1e-8);
  REQUIRE(check_first_order(inst, res.potentials, 1e-8).passed);
  REQUIRE(std::abs(duality_gap(inst, res.plan, res.potentials)) <= 1e-8);
}

TEST_CASE("every half-step of the sweep is a dual ascent") {
  const ProblemInstance inst = testing_support::small_fixture();
  DualPotentials pot = DualPotentials::zeros(2, 3);
  double g_prev = dual_objective(inst, pot);
  for (int sweep = 0; sweep < 30; ++sweep) {
    const std::vector<double> h_tilde = h_step(inst, pot.g, pot.h);
    const double g_h = dual_objective(inst, {pot.f, pot.g, h_tilde});
    REQUIRE(g_h >= g_prev - 1e-12);

    const std::vector<double> f_tilde = f_step(inst, pot.g, h_tilde);
    const double g_f = dual_objective(inst, {f_tilde, pot.g, h_tilde});
    REQUIRE(g_f >= g_h - 1e-12);

    const std::vector<double> g_tilde = g_step(inst, f_tilde, h_tilde);
    const double g_g = dual_objective(inst, {f_tilde, g_tilde, h_tilde});
    REQUIRE(g_g >= g_f - 1e-12);

    pot = normalize({f_tilde, g_tilde, h_tilde}, inst.mu, inst.nu);
    const double g_norm = dual_objective(inst, pot);
    REQUIRE(std::abs(g_norm - g_g) <= 1e-9 * std::max(1.0, std::abs(g_g)));
    g_prev = g_norm;
  }
}

TEST_CASE("f-step pins the x marginal, g-step pins the y marginal") {
  const ProblemInstance inst = testing_support::small_fixture();
  // start from a deliberately skewed g so the updates have work to do
  DualPotentials pot = DualPotentials::zeros(2, 3);
  pot.g = {0.4, -0.1, 0.3};

  const std::vector<double> h_tilde = h_step(inst, pot.g, pot.h);
  const std::vector<double> f_tilde = f_step(inst, pot.g, h_tilde);
  const TransportPlan after_f = induced_plan(inst, {f_tilde, pot.g, h_tilde});
  REQUIRE(after_f.x_marginal_error <= 1e-13);
  // the h-step drove every row's drift to the root tolerance
  REQUIRE(after_f.max_martingale_rel <= 1e-10);

  const std::vector<double> g_tilde = g_step(inst, f_tilde, h_tilde);
  const TransportPlan after_g = induced_plan(inst, {f_tilde, g_tilde, h_tilde});
  REQUIRE(after_g.y_marginal_error <= 1e-13);
}

TEST_CASE("dual values along the trace are non-decreasing") {
  const ProblemInstance inst = testing_support::small_fixture();
  const SolveResult res = iterate(inst, DualPotentials::zeros(2, 3));
  REQUIRE(res.trace.records.size() >= 2);
  for (std::size_t t = 1; t < res.trace.records.size(); ++t)
    REQUIRE(res.trace.records[t].g_value >= res.trace.records[t - 1].g_value - 1e-12);
  // potentials stay bounded on a feasible instance
  for (const TraceRecord& r : res.trace.records) {
    REQUIRE(r.max_f < 50.0);
    REQUIRE(r.max_g < 50.0);
    REQUIRE(r.max_h < 50.0);
  }
}

TEST_CASE("iteration cap terminates with a max_iters verdict") {
  const ProblemInstance inst = testing_support::small_fixture();
  SolverConfig cfg;
  cfg.max_iters = 3;
  cfg.g_tol = 0.0;
  cfg.marginal_tol = 0.0;
  cfg.martingale_tol = 0.0;
  const SolveResult res = iterate(inst, DualPotentials::zeros(2, 3), cfg);
  REQUIRE(res.reason == Termination::max_iters);
  REQUIRE(res.iterations == 3);
  REQUIRE(res.trace.records.back().iter == 3);
}

TEST_CASE("trace stride records multiples plus the final iteration") {
  const ProblemInstance inst = testing_support::small_fixture();
  SolverConfig cfg;
  cfg.max_iters = 10;
  cfg.g_tol = 0.0;
  cfg.marginal_tol = 0.0;
  cfg.martingale_tol = 0.0;
  cfg.trace_every = 4;
  const SolveResult res = iterate(inst, DualPotentials::zeros(2, 3), cfg);
  REQUIRE(res.reason == Termination::max_iters);
  REQUIRE(res.trace.records.size() == 3);
  REQUIRE(res.trace.records[0].iter == 4);
  REQUIRE(res.trace.records[1].iter == 8);
  REQUIRE(res.trace.records[2].iter == 10);
}

TEST_CASE("support violation aborts as infeasible-suspect") {
  // x = 3 lies beyond every y point: that row's drift cannot be zeroed
  DiscreteMeasure mu{{-1.0, 3.0}, {0.5, 0.5}};
  DiscreteMeasure nu{{-2.0, 1.0, 2.0}, {0.4, 0.3, 0.3}};
  DiscreteMeasure rho{{0.1}, {1.0}};
  ProblemInstance inst(mu, nu, rho, CostTensor::zeros(2, 3, 1));

  const SolveResult res = iterate(inst, DualPotentials::zeros(2, 3));
  REQUIRE(res.reason == Termination::infeasible_suspect);
  REQUIRE_FALSE(res.abort_message.empty());
  REQUIRE(res.iterations == 0);
  // the partial result still carries the last materializable plan
  REQUIRE(res.plan.values.size() == 6);
}

TEST_CASE("rate fit recovers the decay of a geometric trace") {
  SolveTrace trace;
  for (int n = 0; n <= 40; ++n) {
    TraceRecord r;
    r.iter = static_cast<std::size_t>(n);
    r.g_value = -std::pow(2.0, -n);
    trace.records.push_back(r);
  }
  const RateFit fit = fit_convergence_rate(trace);
  // gap + floor telescopes to exactly 2^-n, so the fit is exact
  REQUIRE(fit.rate == Catch::Approx(std::log(2.0)).margin(1e-9));
  REQUIRE(fit.r_squared >= 1.0 - 1e-12);
  REQUIRE(fit.points_used == 37);
  REQUIRE(fit.epsilon_floor == Catch::Approx(std::pow(2.0, -40)));
}

TEST_CASE("rate fit refuses traces without information") {
  SolveTrace one;
  one.records.push_back(TraceRecord{});
  REQUIRE_THROWS_AS(fit_convergence_rate(one), InsufficientTrace);

  SolveTrace flat;
  for (int n = 0; n < 20; ++n) {
    TraceRecord r;
    r.iter = static_cast<std::size_t>(n);
    r.g_value = -1.0;
    flat.records.push_back(r);
  }
  REQUIRE_THROWS_AS(fit_convergence_rate(flat), InsufficientTrace);
}

TEST_CASE("solver converges on the fixture from a non-zero start") {
  const ProblemInstance inst = testing_support::small_fixture();
  DualPotentials init = DualPotentials::zeros(2, 3);
  init.f = {0.8, -0.3};
  init.g = {-0.5, 0.2, 0.6};
  init.h = {0.1, -0.2};
  const SolveResult res = iterate(inst, init);
  REQUIRE(res.reason == Termination::converged);

  const SolveResult from_zero = iterate(inst, DualPotentials::zeros(2, 3));
  REQUIRE(plan_total_variation(res.plan, from_zero.plan) <= 1e-7);
}
