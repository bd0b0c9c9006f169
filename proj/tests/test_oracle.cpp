#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "helpers.hpp"

using namespace emot;

TEST_CASE("ascent recognizes an already-optimal start") {
  // c = 0 and a point mass at the nu mean make the product reference already
  // a martingale coupling, so the zero potentials are optimal.
  DiscreteMeasure mu{{0.0}, {1.0}};
  DiscreteMeasure nu{{-2.0, 0.0, 2.0}, {0.3, 0.4, 0.3}};
  DiscreteMeasure rho{{0.1, 0.11}, {0.5, 0.5}};
  ProblemInstance inst(mu, nu, rho, CostTensor::zeros(1, 3, 2));

  const DualPotentials opt = full_gradient_ascent(inst, DualPotentials::zeros(1, 3));
  for (double v : opt.f) REQUIRE(std::abs(v) <= 1e-10);
  for (double v : opt.g) REQUIRE(std::abs(v) <= 1e-10);
  for (double v : opt.h) REQUIRE(std::abs(v) <= 1e-10);
  REQUIRE(dual_objective(inst, opt) == Catch::Approx(-1.0).margin(1e-10));
}

TEST_CASE("ascent reaches the same optimum from different starts") {
  const ProblemInstance inst = testing_support::small_fixture();
  AscentConfig cfg;
  cfg.grad_tol = 1e-11;

  const DualPotentials a = full_gradient_ascent(inst, DualPotentials::zeros(2, 3), cfg);
  DualPotentials init = DualPotentials::zeros(2, 3);
  init.f = {0.5, -0.7};
  init.g = {0.2, -0.3, 0.4};
  init.h = {-0.6, 0.8};
  const DualPotentials b = full_gradient_ascent(inst, init, cfg);

  REQUIRE(dual_objective(inst, a) == Catch::Approx(dual_objective(inst, b)).margin(1e-9));
  REQUIRE(plan_total_variation(induced_plan(inst, a), induced_plan(inst, b)) <= 1e-8);
  REQUIRE(a.normalized(inst.mu, inst.nu, 1e-10));
  REQUIRE(check_first_order(inst, a, 1e-8).passed);
}

TEST_CASE("first-order report fails off-optimum and carries its fields") {
  const ProblemInstance inst = testing_support::small_fixture();
  const KktReport rep = check_first_order(inst, DualPotentials::zeros(2, 3), 1e-8);
  REQUIRE_FALSE(rep.passed);
  REQUIRE(rep.tolerance == 1e-8);
  REQUIRE(rep.max_residual() > 1e-2);
  REQUIRE(rep.max_residual() ==
          std::max({rep.max_martingale_residual, rep.max_x_marginal_residual,
                    rep.max_y_marginal_residual}));
}

TEST_CASE("first-order residuals are invariant under the gauge family") {
  const ProblemInstance inst = testing_support::small_fixture();
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DualPotentials pot = DualPotentials::zeros(2, 3);
  for (double& v : pot.f) v = u(rng);
  for (double& v : pot.g) v = u(rng);
  for (double& v : pot.h) v = u(rng);

  const KktReport base = check_first_order(inst, pot);
  const DualPotentials moved =
      apply_invariant_transform(pot, 0.9, -0.7, inst.mu.points, inst.nu.points);
  const KktReport shifted = check_first_order(inst, moved);
  REQUIRE(std::abs(shifted.max_martingale_residual - base.max_martingale_residual) <= 1e-12);
  REQUIRE(std::abs(shifted.max_x_marginal_residual - base.max_x_marginal_residual) <= 1e-12);
  REQUIRE(std::abs(shifted.max_y_marginal_residual - base.max_y_marginal_residual) <= 1e-12);
}

TEST_CASE("duality gap is nonnegative on a feasible coupling and tiny at the optimum") {
  const ProblemInstance inst = testing_support::small_fixture();
  TransportPlan witness;
  witness.shape = {2, 3, 1};
  witness.values = testing_support::fixture_martingale_coupling();

  // any potentials certify a lower bound for a feasible coupling
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    DualPotentials pot = DualPotentials::zeros(2, 3);
    for (double& v : pot.f) v = u(rng);
    for (double& v : pot.g) v = u(rng);
    for (double& v : pot.h) v = u(rng);
    REQUIRE(duality_gap(inst, witness, pot) >= -1e-12);
  }

  // at the optimum the gap closes; far from it the bound is slack
  AscentConfig cfg;
  cfg.grad_tol = 1e-11;
  const DualPotentials opt = full_gradient_ascent(inst, DualPotentials::zeros(2, 3), cfg);
  REQUIRE(std::abs(duality_gap(inst, induced_plan(inst, opt), opt)) <= 1e-8);
  const double slack = duality_gap(inst, witness, DualPotentials::zeros(2, 3));
  const double tight = duality_gap(inst, witness, opt);
  REQUIRE(tight <= slack + 1e-12);
}

TEST_CASE("duality gap is invariant under the gauge family") {
  const ProblemInstance inst = testing_support::small_fixture();
  TransportPlan witness;
  witness.shape = {2, 3, 1};
  witness.values = testing_support::fixture_martingale_coupling();
  DualPotentials pot = DualPotentials::zeros(2, 3);
  pot.f = {0.3, -0.2};
  pot.g = {0.1, 0.0, -0.4};
  pot.h = {0.2, 0.5};
  const double base = duality_gap(inst, witness, pot);
  const DualPotentials moved =
      apply_invariant_transform(pot, -1.1, 0.6, inst.mu.points, inst.nu.points);
  REQUIRE(duality_gap(inst, witness, moved) ==
          Catch::Approx(base).margin(1e-12 * std::max(1.0, std::abs(base))));
}

TEST_CASE("random instances are valid and ship an interior witness") {
  std::mt19937_64 rng(314159);
  for (std::size_t n : {std::size_t{1}, std::size_t{2}, std::size_t{5}})
    for (std::size_t m : {std::size_t{2}, std::size_t{3}, std::size_t{7}})
      for (std::size_t l : {std::size_t{1}, std::size_t{3}}) {
        const RandomInstance ri = random_instance(rng, n, m, l);
        const ProblemInstance& inst = ri.instance;

        const FeasibilityReport rep = validate_instance(inst);
        REQUIRE(rep.hard_ok());
        REQUIRE(rep.convex_order_ok);
        // strict straddle of the supports
        REQUIRE(inst.nu.min_effective_point() < inst.mu.min_effective_point());
        REQUIRE(inst.nu.max_effective_point() > inst.mu.max_effective_point());
        for (double w : inst.mu.weights) REQUIRE(w > 0.0);
        for (double w : inst.nu.weights) REQUIRE(w > 0.0);
        for (double w : inst.rho.weights) REQUIRE(w > 0.0);
        REQUIRE(inst.cost.max_abs <= 1.0);

        REQUIRE(ri.witness.shape == std::array<std::size_t, 3>{n, m, l});
        for (double v : ri.witness.values) REQUIRE(v > 0.0);
        REQUIRE(ri.witness.x_marginal_error <= 1e-12);
        REQUIRE(ri.witness.y_marginal_error <= 1e-12);
        REQUIRE(ri.witness.max_martingale_rel <= 1e-12);
        REQUIRE(ri.witness.total_mass == Catch::Approx(1.0).margin(1e-12));
      }
}

TEST_CASE("random instances are solvable end to end") {
  std::mt19937_64 rng(271828);
  for (int rep = 0; rep < 3; ++rep) {
    const RandomInstance ri = random_instance(rng, 3, 4, 2);
    const SolveResult res = iterate(ri.instance, DualPotentials::zeros(3, 4));
    REQUIRE(res.reason == Termination::converged);
    REQUIRE(res.plan.x_marginal_error <= 1e-9);
    REQUIRE(res.plan.max_martingale_rel <= 1e-6);
    // the witness entropy is an upper bound for the optimal value
    const double upper = relative_entropy(ri.witness, ri.instance);
    const double lower = dual_objective(ri.instance, res.potentials) + 1.0;
    REQUIRE(lower <= upper + 1e-10);
  }
}

TEST_CASE("ascent enforces its size guard and failure modes") {
  std::mt19937_64 rng(5);
  const RandomInstance big = random_instance(rng, 51, 53, 1);
  REQUIRE_THROWS_AS(
      full_gradient_ascent(big.instance, DualPotentials::zeros(51, 53)), ConfigError);

  const ProblemInstance inst = testing_support::small_fixture();
  AscentConfig starve;
  starve.max_iters = 1;
  starve.grad_tol = 1e-30;
  REQUIRE_THROWS_AS(full_gradient_ascent(inst, DualPotentials::zeros(2, 3), starve),
                    NoConvergence);
}

TEST_CASE("random instance rejects degenerate shape requests") {
  std::mt19937_64 rng(9);
  REQUIRE_THROWS_AS(random_instance(rng, 0, 3, 1), ConfigError);
  REQUIRE_THROWS_AS(random_instance(rng, 2, 1, 1), ConfigError);
  REQUIRE_THROWS_AS(random_instance(rng, 2, 3, 0), ConfigError);
}
