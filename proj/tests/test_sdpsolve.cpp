#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "ebound/sdpsolve.hpp"

using namespace ebound;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void setEntry(SdpConstraint& con, int block, int row, int col, double value) {
  if (row > col) std::swap(row, col);
  con.matrixEntries.push_back({block, row, col, value});
}

SdpConstraint traceConstraint(int block, int dim, double rhs) {
  SdpConstraint con;
  for (int i = 0; i < dim; ++i) setEntry(con, block, i, i, 1.0);
  con.rhs = rhs;
  return con;
}

// Builds a problem from a sampled strictly complementary optimal pair:
// X* = U diag(p) U^T, S* = U diag(q) U^T with p.q = 0, C = A*(y*) + S*,
// b = A(X*) + B f*. The optimal value is then <C, X*> + cf . f*.
struct RandomProblem {
  SdpProblem problem;
  double optimalValue;
};

RandomProblem randomFromOptimalPair(std::mt19937_64& rng, bool withFree) {
  std::uniform_int_distribution<int> nbDist(1, 3);
  std::uniform_int_distribution<int> dimDist(1, 4);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::uniform_real_distribution<double> pos(0.3, 2.0);

  const int nb = nbDist(rng);
  std::vector<int> dims;
  for (int j = 0; j < nb; ++j) dims.push_back(dimDist(rng));
  std::uniform_int_distribution<int> mDist(2, 8);
  const int m = mDist(rng);
  const int nf = withFree ? 2 : 0;

  std::vector<MatrixXd> Xstar, Sstar;
  for (int j = 0; j < nb; ++j) {
    int n = dims[static_cast<std::size_t>(j)];
    MatrixXd G(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) G(r, c) = uni(rng);
    Eigen::HouseholderQR<MatrixXd> qr(G);
    MatrixXd U = qr.householderQ();
    VectorXd p(n), q(n);
    for (int i = 0; i < n; ++i) {
      if (uni(rng) > 0.0) {
        p[i] = pos(rng);
        q[i] = 0.0;
      } else {
        p[i] = 0.0;
        q[i] = pos(rng);
      }
    }
    // keep at least one strictly positive entry on each side when possible
    if (p.maxCoeff() == 0.0) p[0] = pos(rng), q[0] = 0.0;
    if (q.maxCoeff() == 0.0 && n > 1) q[n - 1] = pos(rng), p[n - 1] = 0.0;
    Xstar.push_back(U * p.asDiagonal() * U.transpose());
    Sstar.push_back(U * q.asDiagonal() * U.transpose());
  }

  VectorXd ystar(m);
  for (int c = 0; c < m; ++c) ystar[c] = uni(rng);
  VectorXd fstar(nf);
  for (int k = 0; k < nf; ++k) fstar[k] = uni(rng);

  SdpProblem prob;
  prob.blockDims = dims;
  prob.numFree = nf;
  std::vector<MatrixXd> Asum(static_cast<std::size_t>(nb));
  for (int j = 0; j < nb; ++j)
    Asum[static_cast<std::size_t>(j)] =
        MatrixXd::Zero(dims[static_cast<std::size_t>(j)], dims[static_cast<std::size_t>(j)]);
  MatrixXd Bdense = MatrixXd::Zero(m, nf);

  for (int c = 0; c < m; ++c) {
    SdpConstraint con;
    double rhs = 0.0;
    for (int j = 0; j < nb; ++j) {
      int n = dims[static_cast<std::size_t>(j)];
      MatrixXd A = MatrixXd::Zero(n, n);
      for (int r = 0; r < n; ++r)
        for (int cc = r; cc < n; ++cc) {
          double v = uni(rng);
          if (std::abs(v) < 0.4) continue;  // keep it sparse
          A(r, cc) = v;
          A(cc, r) = v;
          setEntry(con, j, r, cc, v);
        }
      rhs += A.cwiseProduct(Xstar[static_cast<std::size_t>(j)]).sum();
      Asum[static_cast<std::size_t>(j)] += ystar[c] * A;
    }
    for (int k = 0; k < nf; ++k) {
      double v = uni(rng);
      con.freeEntries.emplace_back(k, v);
      Bdense(c, k) = v;
      rhs += v * fstar[k];
    }
    con.rhs = rhs;
    prob.constraints.push_back(std::move(con));
  }
  prob.costBlocks.resize(static_cast<std::size_t>(nb));
  double opt = 0.0;
  for (int j = 0; j < nb; ++j) {
    prob.costBlocks[static_cast<std::size_t>(j)] =
        Asum[static_cast<std::size_t>(j)] + Sstar[static_cast<std::size_t>(j)];
    opt += prob.costBlocks[static_cast<std::size_t>(j)]
               .cwiseProduct(Xstar[static_cast<std::size_t>(j)])
               .sum();
  }
  VectorXd cf = Bdense.transpose() * ystar;
  prob.freeCost.assign(cf.data(), cf.data() + nf);
  opt += cf.dot(fstar);
  return {std::move(prob), opt};
}

}  // namespace

TEST_SUITE_BEGIN("sdpsolve");

TEST_CASE("minimum eigenvalue via trace-one constraint") {
  SdpProblem prob;
  prob.blockDims = {3};
  MatrixXd C = MatrixXd::Zero(3, 3);
  C.diagonal() << 1.0, 2.0, 3.0;
  prob.costBlocks = {C};
  prob.constraints.push_back(traceConstraint(0, 3, 1.0));
  SdpSolution sol = solveSdp(prob);
  REQUIRE(sol.status == SdpStatus::Optimal);
  CHECK(sol.primalObjective == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(sol.dualObjective == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("negative trace is primal infeasible") {
  SdpProblem prob;
  prob.blockDims = {3};
  prob.constraints.push_back(traceConstraint(0, 3, -1.0));
  SdpSolution sol = solveSdp(prob);
  CHECK(sol.status == SdpStatus::PrimalInfeasible);
}

TEST_CASE("dimension <= 3 one-block problems match eigenvalue oracles") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    int n = 1 + trial % 3;
    MatrixXd C(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = r; c < n; ++c) {
        C(r, c) = uni(rng);
        C(c, r) = C(r, c);
      }
    SdpProblem prob;
    prob.blockDims = {n};
    prob.costBlocks = {C};
    prob.constraints.push_back(traceConstraint(0, n, 1.0));
    SdpSolution sol = solveSdp(prob);
    REQUIRE(sol.status == SdpStatus::Optimal);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(C, Eigen::EigenvaluesOnly);
    double oracle = es.eigenvalues().minCoeff();
    CHECK(sol.primalObjective == doctest::Approx(oracle).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("closed-form two-by-two with unit diagonal") {
  // min c*offdiag subject to X11 = X22 = 1, X >= 0: optimum -|c|.
  for (double c : {0.8, -1.7}) {
    SdpProblem prob;
    prob.blockDims = {2};
    MatrixXd C = MatrixXd::Zero(2, 2);
    C(0, 1) = C(1, 0) = 0.5 * c;  // <C, X> = c X12
    prob.costBlocks = {C};
    SdpConstraint c1, c2;
    setEntry(c1, 0, 0, 0, 1.0);
    c1.rhs = 1.0;
    setEntry(c2, 0, 1, 1, 1.0);
    c2.rhs = 1.0;
    prob.constraints = {c1, c2};
    SdpSolution sol = solveSdp(prob);
    REQUIRE(sol.status == SdpStatus::Optimal);
    CHECK(sol.primalObjective == doctest::Approx(-std::abs(c)).epsilon(1e-7));
  }
}

TEST_CASE("fifty random problems from known optimal pairs") {
  std::mt19937_64 rng(11);
  int solved = 0;
  for (int trial = 0; trial < 50; ++trial) {
    auto [prob, opt] = randomFromOptimalPair(rng, trial % 2 == 1);
    SdpSolution sol = solveSdp(prob);
    REQUIRE_MESSAGE(sol.status == SdpStatus::Optimal,
                    "trial ", trial, " status ", statusName(sol.status));
    CHECK_MESSAGE(std::abs(sol.primalObjective - opt) <=
                      1e-7 * (1.0 + std::abs(opt)),
                  "trial ", trial, ": got ", sol.primalObjective,
                  " expected ", opt);
    ++solved;
  }
  CHECK(solved == 50);
}

TEST_CASE("optimal exits satisfy complementarity and feasibility") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    auto [prob, opt] = randomFromOptimalPair(rng, trial % 2 == 0);
    (void)opt;
    SdpOptions opts;
    SdpSolution sol = solveSdp(prob, opts);
    REQUIRE(sol.status == SdpStatus::Optimal);
    double total = 0.0, comp = 0.0;
    for (std::size_t j = 0; j < sol.X.size(); ++j) {
      total += static_cast<double>(sol.X[j].rows());
      comp += sol.X[j].cwiseProduct(sol.S[j]).sum();
      Eigen::SelfAdjointEigenSolver<MatrixXd> ex(sol.X[j], Eigen::EigenvaluesOnly);
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(sol.S[j], Eigen::EigenvaluesOnly);
      CHECK(ex.eigenvalues().minCoeff() >= -1e-9);
      CHECK(es.eigenvalues().minCoeff() >= -1e-9);
    }
    CHECK(comp / total <= 10 * opts.gapTol * (1.0 + std::abs(sol.primalObjective)));
    // equality residuals
    double bInf = 0.0;
    for (const auto& con : prob.constraints) bInf = std::max(bInf, std::abs(con.rhs));
    for (const auto& con : prob.constraints) {
      double lhs = 0.0;
      for (const auto& e : con.matrixEntries) {
        double x = sol.X[static_cast<std::size_t>(e.block)](e.row, e.col);
        lhs += e.value * (e.row == e.col ? x : 2.0 * x);
      }
      for (const auto& [k, v] : con.freeEntries)
        lhs += v * sol.freeValues[static_cast<std::size_t>(k)];
      CHECK(std::abs(lhs - con.rhs) <= opts.feasTol * (1.0 + bInf) * 10);
    }
  }
}

TEST_CASE("relative gap decreases essentially monotonically") {
  std::mt19937_64 rng(31);
  auto [prob, opt] = randomFromOptimalPair(rng, true);
  (void)opt;
  SdpSolution sol = solveSdp(prob);
  REQUIRE(sol.status == SdpStatus::Optimal);
  for (std::size_t i = 1; i < sol.trace.size(); ++i) {
    // Allow a 10% excursion between accepted iterations.
    CHECK(sol.trace[i].relGap <= 1.10 * sol.trace[i - 1].relGap + 1e-12);
  }
}

TEST_CASE("duplicate rows do not crash the solver") {
  SdpProblem prob;
  prob.blockDims = {2};
  MatrixXd C = MatrixXd::Identity(2, 2);
  prob.costBlocks = {C};
  prob.constraints.push_back(traceConstraint(0, 2, 1.0));
  prob.constraints.push_back(traceConstraint(0, 2, 1.0));  // duplicate
  SdpSolution sol = solveSdp(prob);
  CHECK(sol.status == SdpStatus::Optimal);
  CHECK(sol.primalObjective == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("vacuous rows are dropped and inconsistent ones rejected") {
  SdpProblem prob;
  prob.blockDims = {2};
  prob.constraints.push_back(traceConstraint(0, 2, 1.0));
  SdpConstraint zero;
  zero.rhs = 0.0;
  prob.constraints.push_back(zero);
  SdpSolution sol = solveSdp(prob);
  CHECK(sol.status == SdpStatus::Optimal);

  SdpConstraint bad;
  bad.rhs = 3.0;
  prob.constraints.push_back(bad);
  SdpSolution sol2 = solveSdp(prob);
  CHECK(sol2.status == SdpStatus::PrimalInfeasible);
}

TEST_CASE("sparse dump round-trips the problem shape") {
  SdpProblem prob;
  prob.blockDims = {2, 1};
  prob.numFree = 1;
  prob.freeCost = {1.0};
  SdpConstraint con;
  setEntry(con, 0, 0, 1, 2.5);
  setEntry(con, 1, 0, 0, 1.0);
  con.freeEntries.emplace_back(0, -1.0);
  con.rhs = 0.5;
  prob.constraints.push_back(con);
  std::string dump = prob.dumpSparse();
  CHECK(dump.find("m 1 blocks 2 free 1") != std::string::npos);
  CHECK(dump.find("dims 2 1") != std::string::npos);
  CHECK(dump.find("obj free 0 1") != std::string::npos);
  CHECK(dump.find("rhs 0 0.5") != std::string::npos);
  CHECK(dump.find("0 0 0 1 2.5") != std::string::npos);
  CHECK(dump.find("0 free 0 -1") != std::string::npos);
}

TEST_SUITE_END();
