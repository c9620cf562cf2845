#include <doctest.h>

#include <cmath>
#include <random>

#include "ebound/system.hpp"

using namespace ebound;

TEST_SUITE_BEGIN("system");

TEST_CASE("lie derivative of the quadratic certificate") {
  ProblemSpec spec = builtinProblem("nonautonomous2d");
  const auto tx = spec.timeStateVars();
  Polynomial v = Polynomial::parse("0.5*(1 + x1^2 + x2^2)", tx);
  Polynomial lv = lieDerivative(v, spec);
  CHECK(lv == Polynomial::parse("-0.1*x1^2 - x2^2", tx));
}

TEST_CASE("lie derivative basics") {
  ProblemSpec spec = builtinProblem("quadratic1d");
  const auto tx = spec.timeStateVars();
  CHECK(lieDerivative(Polynomial::parse("x", tx), spec) ==
        Polynomial::parse("x^2", tx));
  CHECK(lieDerivative(Polynomial::parse("t", tx), spec) ==
        Polynomial::constant(tx, 1.0));
}

TEST_CASE("buildOmega adds the time constraint") {
  ProblemSpec inf = builtinProblem("nonautonomous2d");
  SemialgebraicSet omega = buildOmega(inf);
  REQUIRE(omega.inequalities.size() == 1);
  CHECK(omega.inequalities[0] == Polynomial::parse("t", inf.timeStateVars()));

  ProblemSpec fin = builtinProblem("unstableFocus2d", {{"horizon", "3"}});
  SemialgebraicSet omegaF = buildOmega(fin);
  REQUIRE(omegaF.inequalities.size() == 1);
  CHECK(omegaF.inequalities[0] ==
        Polynomial::parse("t*(3 - t)", fin.timeStateVars()));

  ProblemSpec cubic = builtinProblem("cubicSemistable1d");
  SemialgebraicSet omegaC = buildOmega(cubic);
  CHECK(omegaC.inequalities.size() == 2);  // user box plus time constraint
}

TEST_CASE("buildOmega membership matches direct horizon checks") {
  ProblemSpec fin = builtinProblem("unstableFocus2d", {{"horizon", "3"}});
  SemialgebraicSet omega = buildOmega(fin);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> tDist(-1.0, 5.0);
  std::uniform_real_distribution<double> xDist(-2.0, 2.0);
  for (int k = 0; k < 200; ++k) {
    double pt[3] = {tDist(rng), xDist(rng), xDist(rng)};
    bool direct = pt[0] >= 0.0 && pt[0] <= 3.0;
    bool viaSet = omega.contains(std::span<const double>(pt, 3), 1e-12);
    CHECK(direct == viaSet);
  }
}

TEST_CASE("burgers truncation small cases") {
  ProblemSpec one = burgersTruncation(1);
  const auto tx1 = one.timeStateVars();
  const double w1 = 4.0 * M_PI * M_PI;
  Polynomial expected1 = Polynomial::variable(tx1, 1).scaled(-w1);
  CHECK(one.dynamics[0] == expected1);

  ProblemSpec two = burgersTruncation(2);
  const auto tx2 = two.timeStateVars();
  const double s = std::sqrt(2.0) * M_PI;
  Polynomial a1 = Polynomial::variable(tx2, 1);
  Polynomial a2 = Polynomial::variable(tx2, 2);
  CHECK(two.dynamics[0] == a1.scaled(-w1) + (a1 * a2).scaled(s));
  CHECK(two.dynamics[1] ==
        a2.scaled(-16.0 * M_PI * M_PI) + (a1 * a1).scaled(-s));
}

TEST_CASE("burgers energy identity cancels exactly up to N = 16") {
  for (int n : {1, 2, 3, 8, 16}) {
    ProblemSpec spec = burgersTruncation(n);
    const auto tx = spec.timeStateVars();
    Polynomial identity(tx);
    for (int i = 0; i < n; ++i) {
      Polynomial ai = Polynomial::variable(tx, i + 1);
      identity = identity + (ai * spec.dynamics[static_cast<std::size_t>(i)]).scaled(2.0);
    }
    identity = identity + spec.observable->embedded(tx).scaled(4.0);
    CHECK(identity.maxAbsCoefficient() <= 1e-10);
  }
}

TEST_CASE("builtin initial sets match the benchmark definitions") {
  ProblemSpec point = builtinProblem("nonautonomous2d", {{"x0", "point"}});
  REQUIRE(point.initialSet.equalities.size() == 2);
  CHECK(point.initialSet.equalities[0] ==
        Polynomial::parse("x1", point.stateVars));
  CHECK(point.initialSet.equalities[1] ==
        Polynomial::parse("x2 - 1", point.stateVars));

  ProblemSpec circle = builtinProblem("nonautonomous2d", {{"x0", "circle"}});
  REQUIRE(circle.initialSet.equalities.size() == 1);
  CHECK(circle.initialSet.equalities[0] ==
        Polynomial::parse("(x1 + 0.75)^2 + x2^2 - 1", circle.stateVars));

  ProblemSpec focus = builtinProblem("unstableFocus2d");
  REQUIRE(focus.initialSet.equalities.size() == 1);
  CHECK(focus.initialSet.equalities[0] ==
        Polynomial::parse("x1^2 + x2^2 - 0.25", focus.stateVars));
  CHECK(*focus.observable ==
        Polynomial::parse("x1^2 + x2^2", focus.timeStateVars()));

  CHECK_THROWS_AS(builtinProblem("noSuchSystem"), Error);
}

TEST_CASE("declared symmetries hold as exact polynomial identities") {
  for (const auto& name : {"unstableFocus2d", "vanDerPol"}) {
    ProblemSpec spec = builtinProblem(name);
    REQUIRE(spec.symmetrySigns.has_value());
    const auto tx = spec.timeStateVars();
    const auto& signs = *spec.symmetrySigns;
    for (std::size_t i = 0; i < spec.dynamics.size(); ++i) {
      Polynomial flipped = spec.dynamics[i].embedded(tx);
      for (std::size_t j = 0; j < spec.stateVars.size(); ++j)
        if (signs[j] < 0)
          flipped = flipped.substituteScaled(
              flipped.indexOf(spec.stateVars[j]), -1.0);
      CHECK((flipped - spec.dynamics[i].embedded(tx).scaled(signs[i])).isZero());
    }
  }
  ProblemSpec burgers = burgersTruncation(6);
  REQUIRE(burgers.symmetrySigns.has_value());
  CHECK((*burgers.symmetrySigns)[0] == -1);
  CHECK((*burgers.symmetrySigns)[1] == 1);
}

TEST_CASE("symmetry validation rejects a wrong sign vector") {
  ProblemSpec spec = builtinProblem("vanDerPol");
  spec.symmetrySigns = std::vector<int>{-1, 1};
  CHECK_THROWS_AS(spec.validate(), Error);
}

TEST_CASE("integral augmentation adds one conserved-start state") {
  ProblemSpec spec = builtinProblem("unstableFocus2d");
  spec.integrand = Polynomial::parse("x1^2", spec.timeStateVars());
  ProblemSpec aug = augmentWithIntegral(spec);
  CHECK(aug.stateDim() == 3);
  CHECK(aug.dynamics.back() ==
        Polynomial::parse("x1^2", aug.timeStateVars()));
  // z(0) = 0 equality appended
  CHECK(aug.initialSet.equalities.size() ==
        spec.initialSet.equalities.size() + 1);
  REQUIRE(aug.symmetrySigns.has_value());
  CHECK(aug.symmetrySigns->back() == 1);
}

TEST_CASE("state rescale maps trajectories consistently") {
  ProblemSpec spec = builtinProblem("unstableFocus2d");
  ProblemSpec scaled = rescaleState(spec, 2.0);
  // y = x/2 dynamics evaluated at y match f(x)/2.
  const auto tx = spec.timeStateVars();
  double x[3] = {0.7, 0.3, -0.4};
  double y[3] = {0.7, 0.15, -0.2};
  for (int i = 0; i < 2; ++i) {
    double fx = spec.dynamics[static_cast<std::size_t>(i)].embedded(tx).evaluate(
        std::span<const double>(x, 3));
    double fy = scaled.dynamics[static_cast<std::size_t>(i)].embedded(tx).evaluate(
        std::span<const double>(y, 3));
    CHECK(fy == doctest::Approx(fx / 2.0));
  }
}

TEST_SUITE_END();
