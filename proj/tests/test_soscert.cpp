#include <doctest.h>

#include <random>

#include "ebound/soscert.hpp"

using namespace ebound;

namespace {

AffinePoly constantTarget(const Polynomial& p) {
  AffinePoly t;
  affineAddPoly(t, p, 1.0);
  return t;
}

}  // namespace

TEST_SUITE_BEGIN("soscert");

TEST_CASE("monomial basis enumeration order") {
  auto basis = monomialBasis(2, 2);  // variables (t, x)
  REQUIRE(basis.size() == 6);
  CHECK(basis[0] == Monomial::one());
  CHECK(basis[1] == Monomial::variable(0));       // t
  CHECK(basis[2] == Monomial::variable(1));       // x
  CHECK(basis[3] == Monomial::variable(0, 2));    // t^2
  CHECK(basis[4] == Monomial({{0, 1}, {1, 1}}));  // t*x
  CHECK(basis[5] == Monomial::variable(1, 2));    // x^2

  CHECK(monomialBasis(3, 0).size() == 1);
  CHECK(monomialBasis(3, 0)[0] == Monomial::one());
  // C(2+degree, degree) monomials over two variables.
  CHECK(monomialBasis(2, 5).size() == 21);
}

TEST_CASE("parity-filtered basis") {
  std::vector<int> signs = {-1, -1};
  auto even = monomialBasis(2, 2, signs, 0);
  REQUIRE(even.size() == 4);
  CHECK(even[0] == Monomial::one());
  CHECK(even[1] == Monomial::variable(0, 2));     // x1^2
  CHECK(even[2] == Monomial({{0, 1}, {1, 1}}));   // x1*x2
  CHECK(even[3] == Monomial::variable(1, 2));     // x2^2
  auto odd = monomialBasis(2, 2, signs, 1);
  REQUIRE(odd.size() == 2);
  CHECK(odd[0] == Monomial::variable(0));
  CHECK(odd[1] == Monomial::variable(1));
}

TEST_CASE("identity multiplier certifies 1 - x^2 on its own level set") {
  std::vector<std::string> vars = {"x"};
  SemialgebraicSet set;
  set.inequalities.push_back(Polynomial::parse("1 - x^2", vars));
  SosAssembler assembler;
  assembler.addConstraint("test", vars,
                          constantTarget(Polynomial::parse("1 - x^2", vars)),
                          set, 2);
  assembler.setObjective({});
  SdpSolution sol = solveSdp(assembler.sdp());
  REQUIRE(sol.status == SdpStatus::Optimal);
  CHECK(constraintResidual(assembler.constraints()[0], sol, sol.freeValues) <=
        1e-7);
}

TEST_CASE("an odd polynomial is not a sum of squares") {
  std::vector<std::string> vars = {"x"};
  SosAssembler assembler;
  assembler.addConstraint("test", vars,
                          constantTarget(Polynomial::parse("x", vars)),
                          SemialgebraicSet{}, 2);
  assembler.setObjective({});
  SdpSolution sol = solveSdp(assembler.sdp());
  CHECK(sol.status == SdpStatus::PrimalInfeasible);
}

TEST_CASE("point initial set reduces to evaluation") {
  // lambda - V(0, x) on X0 = {x1 = 0, x2 = 1} with quadratic multipliers
  // forces lambda >= V(0, 0, 1); here V is fixed so the minimal lambda is
  // V(0, 0, 1) itself.
  std::vector<std::string> xs = {"x1", "x2"};
  SemialgebraicSet x0;
  x0.equalities.push_back(Polynomial::parse("x1", xs));
  x0.equalities.push_back(Polynomial::parse("x2 - 1", xs));

  Polynomial v0 = Polynomial::parse("0.5*(1 + x1^2 + x2^2)", xs);
  SosAssembler assembler;
  int lambda = assembler.newScalar();
  AffinePoly target;
  AffineCoeff lc;
  lc.terms.emplace_back(lambda, 1.0);
  target[Monomial::one()] = lc;
  affineAddPoly(target, v0, -1.0);
  assembler.addConstraint("initial", xs, std::move(target), x0, 2);
  std::vector<double> cost(static_cast<std::size_t>(assembler.scalarCount()), 0.0);
  cost[static_cast<std::size_t>(lambda)] = 1.0;
  assembler.setObjective(cost);
  SdpSolution sol = solveSdp(assembler.sdp());
  REQUIRE(sol.status == SdpStatus::Optimal);
  CHECK(sol.freeValues[static_cast<std::size_t>(lambda)] ==
        doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("coefficient matching is sound for random assignments") {
  // Fill the Gram blocks and multipliers of an assembled constraint with
  // random values and check that the emitted equations match the directly
  // synthesized polynomial identity.
  std::vector<std::string> vars = {"x1", "x2"};
  SemialgebraicSet set;
  set.inequalities.push_back(Polynomial::parse("1 - x1^2 - x2^2", vars));
  set.equalities.push_back(Polynomial::parse("x1 + x2 - 1", vars));

  SosAssembler assembler;
  AffinePoly target;  // zero target; the residual is evaluated directly
  auto& rec = assembler.addConstraint("rand", vars, std::move(target), set, 4);
  assembler.setObjective({});
  const SdpProblem& sdp = assembler.sdp();

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  SdpSolution fake;
  fake.X.resize(sdp.blockDims.size());
  for (std::size_t j = 0; j < sdp.blockDims.size(); ++j) {
    int n = sdp.blockDims[j];
    Eigen::MatrixXd Q(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = r; c < n; ++c) {
        Q(r, c) = uni(rng);
        Q(c, r) = Q(r, c);
      }
    fake.X[j] = Q;
  }
  std::vector<double> freeVals(static_cast<std::size_t>(sdp.numFree));
  for (auto& v : freeVals) v = uni(rng);
  fake.freeValues = freeVals;

  Polynomial recon(vars);
  for (const auto& g : rec.grams) {
    const auto& Q = fake.X[static_cast<std::size_t>(g.blockIndex)];
    Polynomial sigma(vars);
    for (std::size_t a = 0; a < g.basis.size(); ++a)
      for (std::size_t b = 0; b < g.basis.size(); ++b) {
        double q = Q(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        sigma = sigma + Polynomial::fromTerms(
                            vars, {{g.basis[a].times(g.basis[b]), q}});
      }
    recon = recon + sigma * g.weight;
  }
  for (const auto& d : rec.multipliers) {
    Polynomial rho(vars);
    for (std::size_t k = 0; k < d.basis.size(); ++k)
      rho = rho + Polynomial::fromTerms(
                      vars,
                      {{d.basis[k],
                        freeVals[static_cast<std::size_t>(d.firstScalar) + k]}});
    recon = recon + rho * d.weight;
  }
  double scale = std::max(1.0, recon.maxAbsCoefficient());
  for (std::size_t r = 0; r < rec.rowMonomials.size(); ++r) {
    const auto& con = sdp.constraints[static_cast<std::size_t>(rec.firstRow) + r];
    double lhs = 0.0;
    for (const auto& e : con.matrixEntries) {
      double x = fake.X[static_cast<std::size_t>(e.block)](e.row, e.col);
      lhs += e.value * (e.row == e.col ? x : 2.0 * x);
    }
    for (const auto& [k, v] : con.freeEntries)
      lhs += v * freeVals[static_cast<std::size_t>(k)];
    double expected = recon.coefficient(rec.rowMonomials[r]);
    CHECK(std::abs(lhs - expected - con.rhs) <= 1e-12 * scale);
  }
  CHECK(constraintResidual(rec, fake, freeVals) <= 1e-12 * scale);
}

TEST_CASE("degree-2 bound for the nonautonomous benchmark is exactly one") {
  ProblemSpec spec = builtinProblem("nonautonomous2d", {{"x0", "point"}});
  SosAssembly assembly = assembleBoundSdp(spec, 2);
  SdpSolution sol = solveSdp(assembly.sdp);
  REQUIRE(sol.status == SdpStatus::Optimal);
  RecoveredCertificate cert = recoverV(assembly, sol);
  CHECK(cert.lambda == doctest::Approx(1.0).epsilon(1e-6));
  double point[3] = {0.0, 0.0, 1.0};
  double v0 = cert.V.embedded(spec.timeStateVars())
                  .evaluate(std::span<const double>(point, 3));
  CHECK(v0 == doctest::Approx(1.0).epsilon(1e-5));
  for (const auto& rec : assembly.constraints)
    CHECK(constraintResidual(rec, sol, sol.freeValues) <= 1e-6);
}

TEST_CASE("recoverV refuses infeasible solves") {
  std::vector<std::string> vars = {"x"};
  SosAssembler assembler;
  assembler.addConstraint("test", vars,
                          constantTarget(Polynomial::parse("x", vars)),
                          SemialgebraicSet{}, 2);
  assembler.setObjective({});
  SdpSolution sol = solveSdp(assembler.sdp());
  REQUIRE(sol.status == SdpStatus::PrimalInfeasible);
  SosAssembly assembly;
  assembly.sdp = assembler.sdp();
  assembly.vVars = vars;
  CHECK_THROWS_AS(recoverV(assembly, sol), Error);
}

TEST_CASE("omitted multipliers produce warnings") {
  std::vector<std::string> vars = {"x"};
  SemialgebraicSet set;
  set.inequalities.push_back(Polynomial::parse("1 - x^6", vars));
  SosAssembler assembler;
  assembler.addConstraint("test", vars,
                          constantTarget(Polynomial::parse("1 + x^2", vars)),
                          set, 2);
  REQUIRE(assembler.warnings().size() == 1);
  CHECK(assembler.warnings()[0].find("omitted") != std::string::npos);
}

TEST_CASE("symmetry reduction preserves the optimum at degree 4") {
  ProblemSpec spec = builtinProblem("unstableFocus2d");
  BoundSdpOptions on, off;
  on.timeIndependentV = off.timeIndependentV = true;
  off.symmetryReduction = false;
  SosAssembly a1 = assembleBoundSdp(spec, 4, on);
  SosAssembly a2 = assembleBoundSdp(spec, 4, off);
  CHECK(a1.sdp.numFree < a2.sdp.numFree);
  SdpSolution s1 = solveSdp(a1.sdp);
  SdpSolution s2 = solveSdp(a2.sdp);
  REQUIRE(s1.status == SdpStatus::Optimal);
  REQUIRE(s2.status == SdpStatus::Optimal);
  double l1 = s1.freeValues[static_cast<std::size_t>(a1.lambdaScalar)];
  double l2 = s2.freeValues[static_cast<std::size_t>(a2.lambdaScalar)];
  CHECK(l1 == doctest::Approx(l2).epsilon(1e-6));
}

TEST_SUITE_END();
