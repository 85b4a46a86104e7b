#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "drgp/bench.hpp"
#include "drgp/car.hpp"
#include "drgp/neuro_ode.hpp"
#include "drgp/reformulate.hpp"
#include "oracles.hpp"

using namespace drgp;

TEST_CASE("gap is the relative shortfall against the reference") {
  CHECK(gap(2.0, 1.9) == doctest::Approx(0.05));
  CHECK(gap(1.0, 1.0) == 0.0);
  CHECK(gap(4.0, 4.4) == doctest::Approx(-0.1));
  CHECK_THROWS_AS(gap(0.0, 1.0), std::invalid_argument);
}

TEST_CASE("alternation refuses jointly convex programs") {
  const RobustGP gp = make_sinr(3, Coupling::Individual, 0.2, 11);
  const SmoothProgram sp = build(gp);
  REQUIRE(sp.convexity == Convexity::Convex);
  CHECK_THROWS_AS(car_solve(sp, CarConfig{}), std::invalid_argument);
}

TEST_CASE("alternation converges to a feasible near-optimal design") {
  const RobustGP gp = make_sinr(3, Coupling::Dependent, 0.2, 11);
  const SmoothProgram sp = build(gp);
  REQUIRE(sp.convexity == Convexity::Biconvex);

  const SmoothProgram reduced = testing::reduced_markov_program(gp);
  IntegratorConfig rcfg;
  const SolveReport ref = solve(reduced, rcfg);
  REQUIRE(ref.converged);
  REQUIRE(ref.objective > 0.0);

  CarConfig cfg;
  const CarReport rep = car_solve(sp, cfg);
  CHECK(rep.converged);
  CHECK(rep.rounds >= 1);
  CHECK(rep.max_violation <= 1e-6);
  CHECK(static_cast<int>(rep.objective_per_round.size()) == rep.rounds);

  // A coordinate-wise scheme cannot beat the exact reduced optimum, and on
  // this family it should land within a few percent above it.
  CHECK(rep.objective >= ref.objective - 1e-6 * std::abs(ref.objective));
  CHECK(rep.objective <= ref.objective * 1.05);

  for (std::size_t i = 1; i < rep.objective_per_round.size(); ++i)
    CHECK(rep.objective_per_round[i] <=
          rep.objective_per_round[i - 1] +
              1e-6 * std::max(1.0, std::abs(rep.objective_per_round[i - 1])));
}

TEST_CASE("round budget is honoured") {
  const RobustGP gp = make_sinr(3, Coupling::Dependent, 0.2, 4);
  const SmoothProgram sp = build(gp);
  CarConfig cfg;
  cfg.max_rounds = 2;
  cfg.round_tol = 0.0;
  const CarReport rep = car_solve(sp, cfg);
  CHECK(rep.rounds <= 2);
  CHECK(!rep.converged);
  CHECK(rep.objective_per_round.size() == 2);
}
