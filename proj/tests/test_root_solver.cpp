#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "helpers.hpp"

using namespace emot;

namespace {

RootProblem make(std::vector<double> d, std::vector<double> w, double warm = 0.0) {
  RootProblem p;
  p.displacements = std::move(d);
  p.weights = std::move(w);
  p.warm_start = warm;
  return p;
}

}  // namespace

TEST_CASE("two-point row has the closed-form root log(2)/3") {
  // -0.5 e^h + 1.0 e^{-2h} = 0  <=>  e^{3h} = 2
  const RootProblem p = make({-1.0, 2.0}, {0.5, 0.5});
  const double h = solve_h(p);
  REQUIRE(h == Catch::Approx(std::log(2.0) / 3.0).margin(1e-11));
  REQUIRE(std::abs(phi(p, h)) <= 1e-12);

  const double href = testing_support::bisect_root(p.displacements, p.weights, -10.0, 10.0, 1e-13);
  REQUIRE(h == Catch::Approx(href).margin(1e-10));
}

TEST_CASE("scaled residual keeps the sign of the decreasing raw residual") {
  const RootProblem p = make({-1.5, -0.2, 0.7, 2.0}, {0.1, 0.4, 0.3, 0.2});
  // The raw residual sum_j d_j w_j exp(-h d_j) is strictly decreasing; the
  // overflow-safe scaled form only promises the same sign and root.
  const auto raw = [&](double h) {
    double s = 0.0;
    for (std::size_t j = 0; j < p.displacements.size(); ++j)
      s += p.displacements[j] * p.weights[j] * std::exp(-h * p.displacements[j]);
    return s;
  };
  double prev = raw(-3.0);
  for (double h = -2.5; h <= 3.0; h += 0.5) {
    const double cur = raw(h);
    REQUIRE(cur < prev);
    prev = cur;
  }
  const double root = solve_h(p);
  for (double h = -3.0; h <= 3.0; h += 0.25) {
    if (std::abs(h - root) < 0.1) continue;
    REQUIRE(std::signbit(phi(p, h)) == std::signbit(raw(h)));
    REQUIRE((h < root ? phi(p, h) > 0.0 : phi(p, h) < 0.0));
  }
}

TEST_CASE("mirroring the displacements negates the root bitwise") {
  const RootProblem p = make({-1.3, -0.4, 0.9, 2.2}, {0.15, 0.35, 0.3, 0.2}, 0.4);
  RootProblem m = p;
  for (double& d : m.displacements) d = -d;
  m.warm_start = -p.warm_start;
  const double h = solve_h(p);
  const double hm = solve_h(m);
  REQUIRE(hm == -h);  // exact: every arithmetic step mirrors
}

TEST_CASE("root is invariant under weight scaling") {
  const RootProblem p = make({-1.0, 0.3, 2.0}, {0.2, 0.5, 0.3});
  RootProblem scaled = p;
  for (double& w : scaled.weights) w *= 3.7;
  REQUIRE(solve_h(scaled) == Catch::Approx(solve_h(p)).margin(1e-12));
}

TEST_CASE("warm start at the root is returned unchanged") {
  const RootProblem cold = make({-1.0, 2.0}, {0.5, 0.5});
  const double h = solve_h(cold);
  RootProblem warm = cold;
  warm.warm_start = h;
  REQUIRE(solve_h(warm) == h);
}

TEST_CASE("distant warm start still reaches the root") {
  const RootProblem p = make({-1.0, 2.0}, {0.5, 0.5}, -50.0);
  REQUIRE(solve_h(p) == Catch::Approx(std::log(2.0) / 3.0).margin(1e-11));
}

TEST_CASE("one-signed displacements have no root") {
  REQUIRE_THROWS_AS(solve_h(make({0.5, 1.0, 2.0}, {0.3, 0.3, 0.4})), BracketFailure);
  REQUIRE_THROWS_AS(solve_h(make({-0.5, -1.0}, {0.5, 0.5})), BracketFailure);
  // zero weights mask the negative side entirely
  REQUIRE_THROWS_AS(solve_h(make({-1.0, 1.0, 2.0}, {0.0, 0.5, 0.5})), BracketFailure);
}

TEST_CASE("zero-displacement entries are inert") {
  const RootProblem base = make({-1.0, 2.0}, {0.5, 0.5});
  const RootProblem padded = make({-1.0, 0.0, 2.0}, {0.5, 123.0, 0.5});
  REQUIRE(solve_h(padded) == Catch::Approx(solve_h(base)).margin(1e-12));
}

TEST_CASE("roots beyond the search range are reported as bracket failures") {
  // root at h = ln(b/a) / 2e-7 = 1e7
  const RootProblem p = make({-1e-7, 1e-7}, {1.0, std::exp(2.0)});
  REQUIRE_THROWS_AS(solve_h(p), BracketFailure);
}

TEST_CASE("malformed problems are rejected") {
  REQUIRE_THROWS_AS(solve_h(make({1.0}, {0.5, 0.5})), std::invalid_argument);
  REQUIRE_THROWS_AS(solve_h(make({}, {})), std::invalid_argument);
  REQUIRE_THROWS_AS(solve_h(make({-1.0, 1.0}, {-0.1, 1.1})), std::invalid_argument);
}

TEST_CASE("asymmetric rows with extreme weight ratios stay accurate") {
  // heavy mass close to x, light mass far away
  const RootProblem p = make({-0.01, 5.0}, {0.999, 0.001});
  const double h = solve_h(p);
  const double href =
      testing_support::bisect_root(p.displacements, p.weights, -100.0, 100.0, 1e-13);
  REQUIRE(h == Catch::Approx(href).margin(1e-9 * std::max(1.0, std::abs(href))));
  REQUIRE(std::abs(phi(p, h)) <= 1e-12);
}
