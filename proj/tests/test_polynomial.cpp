#include <doctest.h>

#include <cmath>
#include <random>

#include "ebound/polynomial.hpp"

using namespace ebound;

namespace {

const std::vector<std::string> kTX = {"t", "x1", "x2"};
const std::vector<std::string> kX = {"x1", "x2"};

Polynomial P(const std::string& text,
             const std::vector<std::string>& vars = kTX) {
  return Polynomial::parse(text, vars);
}

// Random polynomials over two variables. Integer coefficients keep ring
// identities exact in double arithmetic; real coefficients exercise the
// printer and numeric paths.
Polynomial randomPoly(std::mt19937_64& rng, int maxDeg = 3,
                      bool integerCoeffs = true,
                      const std::vector<std::string>& vars = kX) {
  std::uniform_int_distribution<int> degDist(0, maxDeg);
  std::uniform_int_distribution<int> countDist(1, 6);
  std::uniform_int_distribution<int> intDist(-10, 10);
  std::uniform_real_distribution<double> coeffDist(-10.0, 10.0);
  Polynomial p(vars);
  int count = countDist(rng);
  for (int k = 0; k < count; ++k) {
    std::vector<std::pair<int, int>> factors;
    int budget = degDist(rng);
    for (std::size_t v = 0; v < vars.size() && budget > 0; ++v) {
      std::uniform_int_distribution<int> expDist(0, budget);
      int e = expDist(rng);
      if (e > 0) factors.emplace_back(static_cast<int>(v), e);
      budget -= e;
    }
    double c = integerCoeffs ? double(intDist(rng)) : coeffDist(rng);
    p = p + Polynomial::fromTerms(vars, {{Monomial(factors), c}});
  }
  return p;
}

}  // namespace

TEST_SUITE_BEGIN("polynomial");

TEST_CASE("addition merges and cancels terms") {
  CHECK((P("x1") + P("-x1")).isZero());
  CHECK(P("x1^2 + 1") + P("2*x1^2") == P("3*x1^2 + 1"));
  // Different lists with an embedding: (t x2) + (x1 x2).
  Polynomial a = Polynomial::parse("t*x2", kTX);
  Polynomial b = Polynomial::parse("x1*x2", {"x1", "x2"});
  CHECK(a + b == P("t*x2 + x1*x2"));
}

TEST_CASE("incompatible variable lists raise naming the variable") {
  Polynomial a = Polynomial::parse("u", {"u"});
  Polynomial b = Polynomial::parse("v", {"v"});
  CHECK_THROWS_WITH_AS(a + b,
                       doctest::Contains("'v'"), Error);
}

TEST_CASE("multiplication distributes and merges") {
  CHECK(P("x1 + x2") * P("x1 + x2") == P("x1^2 + 2*x1*x2 + x2^2"));
  Polynomial p = P("0.5*t^2*x1 - 3*x2");
  CHECK(p * P("1") == p);
  CHECK(P("x1 - 1") * P("x1 + 1") == P("x1^2 - 1"));
}

TEST_CASE("degree of a product adds for nonzero factors") {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 50; ++k) {
    Polynomial p = randomPoly(rng), q = randomPoly(rng);
    if (p.isZero() || q.isZero()) continue;
    CHECK((p * q).degree() == p.degree() + q.degree());
  }
}

TEST_CASE("differentiation") {
  CHECK(P("x1^2*x2").differentiate("x1") == P("2*x1*x2"));
  CHECK(P("x1^2").differentiate("t").isZero());
  CHECK(P("0.5*(1 + x1^2 + x2^2)").differentiate("x2") == P("x2"));
  CHECK_THROWS_AS(P("x1").differentiate("nope"), Error);
}

TEST_CASE("evaluation") {
  Polynomial v = P("0.5*(1 + x1^2 + x2^2)");
  CHECK(v.evaluate({{"t", 0.0}, {"x1", 0.0}, {"x2", 1.0}}) == doctest::Approx(1.0));
  CHECK(P("x1^2*x2").evaluate({{"x1", 2.0}, {"x2", 3.0}}) == doctest::Approx(12.0));
  Polynomial numerator = Polynomial::parse("4*x", {"x"});
  CHECK(numerator.evaluate({{"x", 0.5}}) == doctest::Approx(2.0));
  CHECK_THROWS_WITH_AS(P("x1*x2").evaluate({{"x1", 1.0}}),
                       doctest::Contains("x2"), Error);
}

TEST_CASE("parser handles the benchmark right-hand sides") {
  Polynomial f1 = P("x2*t - 0.1*x1 - x1*x2");
  CHECK(f1.coefficient(Monomial({{0, 1}, {2, 1}})) == doctest::Approx(1.0));
  CHECK(f1.coefficient(Monomial({{1, 1}})) == doctest::Approx(-0.1));
  CHECK(f1.coefficient(Monomial({{1, 1}, {2, 1}})) == doctest::Approx(-1.0));

  Polynomial vdp = P("(1 - 9*x1^2)*x2 - x1");
  CHECK(vdp == P("x2 - 9*x1^2*x2 - x1"));

  CHECK(Polynomial::parse("x1^0", kX) == Polynomial::constant(kX, 1.0));
}

TEST_CASE("parser rejects malformed input with byte offsets") {
  CHECK_THROWS_AS(Polynomial::parse("x1 +* x2", kX), ParseError);
  try {
    Polynomial::parse("x1^-1", kX);
    FAIL("expected a parse error");
  } catch (const ParseError& ex) {
    CHECK(ex.offset() == 3);
    CHECK(std::string(ex.what()).find("offset 3") != std::string::npos);
  }
  try {
    Polynomial::parse("x1 + y2", kX);
    FAIL("expected a parse error");
  } catch (const ParseError& ex) {
    CHECK(ex.offset() == 5);
  }
  // Implicit multiplication is not allowed.
  CHECK_THROWS_AS(Polynomial::parse("2x1", kX), ParseError);
  CHECK_THROWS_AS(Polynomial::parse("x1 x2", kX), ParseError);
  CHECK_THROWS_AS(Polynomial::parse("x1^2.5", kX), ParseError);
}

TEST_CASE("canonical printing uses graded-lex order") {
  CHECK(P("3*x1^2*x2 - 1.5*t").str() == "3*x1^2*x2 - 1.5*t");
  CHECK(P("x2*t - 0.1*x1 - x1*x2").str() == "t*x2 - x1*x2 - 0.1*x1");
  CHECK(Polynomial(kX).str() == "0");
  CHECK(P("x1 - 1").str() == "x1 - 1");
  CHECK(P("-x1^2").str() == "-x1^2");
}

TEST_CASE("ring axioms on random polynomials") {
  std::mt19937_64 rng(42);
  for (int k = 0; k < 40; ++k) {
    Polynomial p = randomPoly(rng), q = randomPoly(rng), r = randomPoly(rng);
    CHECK(p + q == q + p);
    CHECK((p + q) + r == p + (q + r));
    CHECK(p * q == q * p);
    CHECK((p * q) * r == p * (q * r));
    CHECK(p * (q + r) == p * q + p * r);
  }
}

TEST_CASE("derivative matches central finite differences") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> pointDist(-1.5, 1.5);
  const double h = 1e-5;
  for (int k = 0; k < 40; ++k) {
    Polynomial p = randomPoly(rng, 4, false);
    for (int v = 0; v < 2; ++v) {
      Polynomial dp = p.differentiate(v);
      double x[2] = {pointDist(rng), pointDist(rng)};
      double lo[2] = {x[0], x[1]}, hi[2] = {x[0], x[1]};
      lo[v] -= h;
      hi[v] += h;
      double fd = (p.evaluate(std::span<const double>(hi, 2)) -
                   p.evaluate(std::span<const double>(lo, 2))) /
                  (2 * h);
      double exact = dp.evaluate(std::span<const double>(x, 2));
      CHECK(fd == doctest::Approx(exact).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("print/parse round trip is exact") {
  std::mt19937_64 rng(1234);
  for (int k = 0; k < 60; ++k) {
    Polynomial p = randomPoly(rng, 5, false);
    Polynomial back = Polynomial::parse(p.str(), p.variables());
    CHECK(back == p);
  }
}

TEST_CASE("pruning drops small coefficients only when asked") {
  Polynomial p = P("x1 + 0.001*x2");
  CHECK(p.pruned(0.01).termCount() == 1);
  CHECK(p.pruned(0.0).termCount() == 2);
}

TEST_SUITE_END();
