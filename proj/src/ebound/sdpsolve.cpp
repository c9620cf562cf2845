#include "ebound/sdpsolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "ebound/polynomial.hpp"  // Error, formatDouble

namespace ebound {

std::string statusName(SdpStatus status) {
  switch (status) {
    case SdpStatus::Optimal: return "Optimal";
    case SdpStatus::PrimalInfeasible: return "PrimalInfeasible";
    case SdpStatus::DualInfeasible: return "DualInfeasible";
    case SdpStatus::SlowProgress: return "SlowProgress";
    case SdpStatus::IterationLimit: return "IterationLimit";
  }
  return "Unknown";
}

std::ostream& operator<<(std::ostream& out, SdpStatus status) {
  return out << statusName(status);
}

void SdpProblem::validate() const {
  if (blockDims.empty()) throw Error("SDP has no blocks");
  for (int d : blockDims)
    if (d <= 0) throw Error("SDP block dimensions must be positive");
  if (numFree < 0) throw Error("negative free-variable count");
  if (!freeCost.empty() && static_cast<int>(freeCost.size()) != numFree)
    throw Error("freeCost length differs from numFree");
  if (!costBlocks.empty()) {
    if (costBlocks.size() != blockDims.size())
      throw Error("costBlocks count differs from block count");
    for (std::size_t j = 0; j < costBlocks.size(); ++j)
      if (costBlocks[j].rows() != blockDims[j] ||
          costBlocks[j].cols() != blockDims[j])
        throw Error("costBlocks dimension mismatch");
  }
  for (const auto& c : constraints) {
    for (const auto& e : c.matrixEntries) {
      if (e.block < 0 || e.block >= static_cast<int>(blockDims.size()))
        throw Error("constraint references undeclared block");
      if (e.row < 0 || e.col < e.row || e.col >= blockDims[e.block])
        throw Error("constraint entry out of range (want row <= col)");
    }
    for (const auto& [idx, v] : c.freeEntries) {
      (void)v;
      if (idx < 0 || idx >= numFree)
        throw Error("constraint references undeclared free variable");
    }
  }
}

std::string SdpProblem::dumpSparse() const {
  std::ostringstream out;
  out << "sdp 1\n";
  out << "m " << constraints.size() << " blocks " << blockDims.size()
      << " free " << numFree << "\n";
  out << "dims";
  for (int d : blockDims) out << " " << d;
  out << "\n";
  for (std::size_t k = 0; k < freeCost.size(); ++k)
    if (freeCost[k] != 0.0)
      out << "obj free " << k << " " << formatDouble(freeCost[k]) << "\n";
  for (std::size_t j = 0; j < costBlocks.size(); ++j)
    for (int r = 0; r < costBlocks[j].rows(); ++r)
      for (int c = r; c < costBlocks[j].cols(); ++c)
        if (costBlocks[j](r, c) != 0.0)
          out << "obj mat " << j << " " << r << " " << c << " "
              << formatDouble(costBlocks[j](r, c)) << "\n";
  for (std::size_t c = 0; c < constraints.size(); ++c)
    if (constraints[c].rhs != 0.0)
      out << "rhs " << c << " " << formatDouble(constraints[c].rhs) << "\n";
  for (std::size_t c = 0; c < constraints.size(); ++c) {
    for (const auto& e : constraints[c].matrixEntries)
      out << c << " " << e.block << " " << e.row << " " << e.col << " "
          << formatDouble(e.value) << "\n";
    for (const auto& [idx, v] : constraints[c].freeEntries)
      out << c << " free " << idx << " " << formatDouble(v) << "\n";
  }
  return out.str();
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Entry {
  int row, col;
  double value;
};

// <A, T> with A given by its upper-triangle entries, applied symmetrically.
double symDot(const std::vector<Entry>& entries, const MatrixXd& T) {
  double sum = 0.0;
  for (const auto& e : entries) {
    double t = T(e.row, e.col);
    sum += e.value * (e.row == e.col ? t : t + T(e.col, e.row));
  }
  return sum;
}

void addScaledSym(MatrixXd& dst, const std::vector<Entry>& entries,
                  double scale) {
  for (const auto& e : entries) {
    dst(e.row, e.col) += scale * e.value;
    if (e.row != e.col) dst(e.col, e.row) += scale * e.value;
  }
}

// Largest step alpha with X + alpha*D >= 0, via eigenvalues of the
// Cholesky-whitened direction.
double maxStepLength(const MatrixXd& X, const MatrixXd& D) {
  Eigen::LLT<MatrixXd> llt(X);
  MatrixXd Xr = X;
  double jitter = 1e-14 * (1.0 + X.trace() / X.rows());
  int tries = 0;
  while (llt.info() != Eigen::Success && tries < 4) {
    Xr.diagonal().array() += jitter;
    llt.compute(Xr);
    jitter *= 100.0;
    ++tries;
  }
  if (llt.info() != Eigen::Success) return 0.0;
  MatrixXd L = llt.matrixL();
  MatrixXd W = L.triangularView<Eigen::Lower>().solve(D);
  W = L.triangularView<Eigen::Lower>().solve(W.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (W + W.transpose()),
                                             Eigen::EigenvaluesOnly);
  double lmin = es.eigenvalues().minCoeff();
  if (lmin >= -1e-14) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

struct ScaledProblem {
  // Presolved copy: zero rows dropped, rows equilibrated.
  std::vector<int> blockDims;
  int numFree = 0;
  VectorXd freeCost;
  std::vector<MatrixXd> C;
  VectorXd b;
  std::vector<double> rowScale;       // applied scale per kept row
  std::vector<int> keptRows;          // original indices
  // per block: constraints touching it
  std::vector<std::vector<int>> blockConstraints;
  // entries[c][j] only for touched blocks: store as (block, entries) pairs
  std::vector<std::vector<std::pair<int, std::vector<Entry>>>> entries;
  std::vector<std::vector<std::pair<int, double>>> freeEntries;
  MatrixXd Bdense;  // m x nf
  double bNormInf = 0.0;
  double cNormInf = 0.0;
  bool trivialInfeasible = false;
};

ScaledProblem presolve(const SdpProblem& p) {
  ScaledProblem sp;
  sp.blockDims = p.blockDims;
  sp.numFree = p.numFree;
  sp.freeCost = VectorXd::Zero(p.numFree);
  for (std::size_t k = 0; k < p.freeCost.size(); ++k)
    sp.freeCost[static_cast<Eigen::Index>(k)] = p.freeCost[k];
  sp.C.resize(p.blockDims.size());
  for (std::size_t j = 0; j < p.blockDims.size(); ++j) {
    if (!p.costBlocks.empty())
      sp.C[j] = 0.5 * (p.costBlocks[j] + p.costBlocks[j].transpose());
    else
      sp.C[j] = MatrixXd::Zero(p.blockDims[j], p.blockDims[j]);
    sp.cNormInf = std::max(sp.cNormInf, sp.C[j].cwiseAbs().maxCoeff());
  }
  if (p.numFree > 0)
    sp.cNormInf = std::max(sp.cNormInf, sp.freeCost.cwiseAbs().maxCoeff());

  std::vector<double> rhs;
  for (std::size_t c = 0; c < p.constraints.size(); ++c) {
    const auto& con = p.constraints[c];
    double maxAbs = 0.0;
    for (const auto& e : con.matrixEntries)
      maxAbs = std::max(maxAbs, std::abs(e.value));
    for (const auto& [idx, v] : con.freeEntries) {
      (void)idx;
      maxAbs = std::max(maxAbs, std::abs(v));
    }
    if (maxAbs == 0.0) {
      if (std::abs(con.rhs) > 1e-12) sp.trivialInfeasible = true;
      continue;  // vacuous row
    }
    double scale = 1.0 / maxAbs;
    sp.keptRows.push_back(static_cast<int>(c));
    sp.rowScale.push_back(scale);
    std::vector<std::pair<int, std::vector<Entry>>> byBlock;
    for (const auto& e : con.matrixEntries) {
      auto it = std::find_if(byBlock.begin(), byBlock.end(),
                             [&](const auto& pr) { return pr.first == e.block; });
      if (it == byBlock.end()) {
        byBlock.push_back({e.block, {}});
        it = std::prev(byBlock.end());
      }
      it->second.push_back(Entry{e.row, e.col, e.value * scale});
    }
    sp.entries.push_back(std::move(byBlock));
    std::vector<std::pair<int, double>> fe;
    for (const auto& [idx, v] : con.freeEntries) fe.emplace_back(idx, v * scale);
    sp.freeEntries.push_back(std::move(fe));
    rhs.push_back(con.rhs * scale);
  }
  const int m = static_cast<int>(rhs.size());
  sp.b = VectorXd::Zero(m);
  for (int c = 0; c < m; ++c) sp.b[c] = rhs[static_cast<std::size_t>(c)];
  sp.bNormInf = m > 0 ? sp.b.cwiseAbs().maxCoeff() : 0.0;
  sp.blockConstraints.assign(p.blockDims.size(), {});
  for (int c = 0; c < m; ++c)
    for (const auto& [j, es] : sp.entries[static_cast<std::size_t>(c)]) {
      (void)es;
      sp.blockConstraints[static_cast<std::size_t>(j)].push_back(c);
    }
  sp.Bdense = MatrixXd::Zero(m, p.numFree);
  for (int c = 0; c < m; ++c)
    for (const auto& [idx, v] : sp.freeEntries[static_cast<std::size_t>(c)])
      sp.Bdense(c, idx) += v;
  return sp;
}

const std::vector<Entry>* entriesFor(const ScaledProblem& sp, int c, int j) {
  for (const auto& [blk, es] : sp.entries[static_cast<std::size_t>(c)])
    if (blk == j) return &es;
  return nullptr;
}

}  // namespace

SdpSolution solveSdp(const SdpProblem& problem, const SdpOptions& opts) {
  SdpSolution sol;
  try {
    problem.validate();
  } catch (const std::exception& ex) {
    sol.status = SdpStatus::SlowProgress;
    sol.message = std::string("invalid problem: ") + ex.what();
    return sol;
  }

  ScaledProblem sp = presolve(problem);
  const int nb = static_cast<int>(sp.blockDims.size());
  const int m = static_cast<int>(sp.b.size());
  const int nf = sp.numFree;
  double totalDim = 0.0;
  for (int d : sp.blockDims) totalDim += d;

  if (sp.trivialInfeasible) {
    sol.status = SdpStatus::PrimalInfeasible;
    sol.message = "a constraint row has no coefficients but nonzero rhs";
    return sol;
  }
  if (m == 0) {
    sol.status = SdpStatus::SlowProgress;
    sol.message = "problem has no effective constraints";
    return sol;
  }

  // Initial iterate: identity blocks scaled from data magnitudes.
  std::vector<MatrixXd> X(static_cast<std::size_t>(nb)), S(static_cast<std::size_t>(nb));
  double maxRowNorm = 1.0;
  for (int c = 0; c < m; ++c) {
    double norm2 = 0.0;
    for (const auto& [j, es] : sp.entries[static_cast<std::size_t>(c)]) {
      (void)j;
      for (const auto& e : es)
        norm2 += e.value * e.value * (e.row == e.col ? 1.0 : 2.0);
    }
    maxRowNorm = std::max(maxRowNorm, std::sqrt(norm2));
  }
  double xScale = std::max({10.0, std::sqrt(totalDim),
                            sp.bNormInf / maxRowNorm * totalDim});
  double sScale = std::max({10.0, std::sqrt(totalDim), sp.cNormInf, maxRowNorm});
  for (int j = 0; j < nb; ++j) {
    int n = sp.blockDims[static_cast<std::size_t>(j)];
    X[static_cast<std::size_t>(j)] = xScale * MatrixXd::Identity(n, n);
    S[static_cast<std::size_t>(j)] = sScale * MatrixXd::Identity(n, n);
  }
  VectorXd y = VectorXd::Zero(m);
  VectorXd f = VectorXd::Zero(nf);

  auto applyAStar = [&](const VectorXd& w, std::vector<MatrixXd>& out) {
    for (int j = 0; j < nb; ++j) {
      int n = sp.blockDims[static_cast<std::size_t>(j)];
      out[static_cast<std::size_t>(j)].setZero(n, n);
      for (int c : sp.blockConstraints[static_cast<std::size_t>(j)]) {
        const auto* es = entriesFor(sp, c, j);
        if (w[c] != 0.0) addScaledSym(out[static_cast<std::size_t>(j)], *es, w[c]);
      }
    }
  };

  auto primalObjective = [&]() {
    double v = sp.freeCost.dot(f);
    for (int j = 0; j < nb; ++j)
      v += sp.C[static_cast<std::size_t>(j)].cwiseProduct(X[static_cast<std::size_t>(j)]).sum();
    return v;
  };

  std::vector<MatrixXd> Rd(static_cast<std::size_t>(nb));
  std::vector<MatrixXd> AstarY(static_cast<std::size_t>(nb));
  VectorXd rp(m), rf(nf);

  auto computeResiduals = [&]() {
    applyAStar(y, AstarY);
    for (int j = 0; j < nb; ++j)
      Rd[static_cast<std::size_t>(j)] = sp.C[static_cast<std::size_t>(j)] -
                                        S[static_cast<std::size_t>(j)] -
                                        AstarY[static_cast<std::size_t>(j)];
    for (int c = 0; c < m; ++c) {
      double ax = 0.0;
      for (const auto& [j, es] : sp.entries[static_cast<std::size_t>(c)])
        ax += symDot(es, X[static_cast<std::size_t>(j)]);
      double bf = 0.0;
      for (const auto& [idx, v] : sp.freeEntries[static_cast<std::size_t>(c)])
        bf += v * f[idx];
      rp[c] = sp.b[c] - ax - bf;
    }
    if (nf > 0) rf = sp.freeCost - sp.Bdense.transpose() * y;
  };

  int slowCount = 0;
  int divergeCountP = 0, divergeCountD = 0;

  // Best iterate by scaled merit, restored when a later iteration only
  // degrades numerically.
  struct Snapshot {
    std::vector<MatrixXd> X, S;
    VectorXd y, f;
    double merit = std::numeric_limits<double>::infinity();
  } best;
  int stallCount = 0;

  auto finish = [&](SdpStatus status, const std::string& message) {
    sol.status = status;
    sol.message = message;
    sol.X = X;
    sol.S = S;
    sol.y = y;
    sol.freeValues.assign(f.data(), f.data() + nf);
    // Undo row scaling on the multipliers.
    Eigen::VectorXd yOut = Eigen::VectorXd::Zero(problem.numConstraints());
    for (int c = 0; c < m; ++c)
      yOut[sp.keptRows[static_cast<std::size_t>(c)]] =
          y[c] * sp.rowScale[static_cast<std::size_t>(c)];
    sol.y = yOut;
    sol.primalObjective = primalObjective();
    sol.dualObjective = sp.b.dot(y);
    double pobj = sol.primalObjective, dobj = sol.dualObjective;
    sol.gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    return sol;
  };

  std::vector<MatrixXd> Sinv(static_cast<std::size_t>(nb));
  std::vector<MatrixXd> Tscratch;
  MatrixXd M(m, m);
  Eigen::LLT<MatrixXd> mLLT;
  MatrixXd W;          // M^{-1} B
  MatrixXd N;          // B^T M^{-1} B
  Eigen::LDLT<MatrixXd> nLDLT;

  std::vector<MatrixXd> dXa(static_cast<std::size_t>(nb)), dSa(static_cast<std::size_t>(nb));
  std::vector<MatrixXd> dX(static_cast<std::size_t>(nb)), dS(static_cast<std::size_t>(nb));
  std::vector<MatrixXd> Q(static_cast<std::size_t>(nb));

  for (int iter = 1; iter <= opts.maxIter; ++iter) {
    computeResiduals();
    double mu = 0.0;
    for (int j = 0; j < nb; ++j)
      mu += X[static_cast<std::size_t>(j)].cwiseProduct(S[static_cast<std::size_t>(j)]).sum();
    mu /= totalDim;

    double pobj = primalObjective();
    double dobj = sp.b.dot(y);
    double relGap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    double pres = rp.cwiseAbs().maxCoeff() / (1.0 + sp.bNormInf);
    double dres = 0.0;
    for (int j = 0; j < nb; ++j)
      dres = std::max(dres, Rd[static_cast<std::size_t>(j)].cwiseAbs().maxCoeff());
    dres /= (1.0 + sp.cNormInf);
    if (nf > 0)
      dres = std::max(dres, rf.cwiseAbs().maxCoeff() / (1.0 + sp.cNormInf));

    sol.trace.push_back({iter - 1, mu, relGap, pres, dres, 0.0, 0.0});
    sol.iterations = iter - 1;
    if (opts.log)
      (*opts.log) << "iter " << iter - 1 << " mu " << mu << " gap " << relGap
                  << " pres " << pres << " dres " << dres << "\n";

    if (relGap <= opts.gapTol && pres <= opts.feasTol && dres <= opts.feasTol)
      return finish(SdpStatus::Optimal, "converged");

    double merit = std::max({relGap / opts.gapTol, pres / opts.feasTol,
                             dres / opts.feasTol});
    auto restoreBest = [&]() {
      if (std::isfinite(best.merit)) {
        X = best.X;
        S = best.S;
        y = best.y;
        f = best.f;
      }
    };
    if (merit < 0.999 * best.merit) {
      best = Snapshot{X, S, y, VectorXd(f), merit};
      stallCount = 0;
    } else if (++stallCount >= 10000) {
      restoreBest();
      return finish(SdpStatus::SlowProgress,
                    "no progress over 8 iterations; best iterate returned");
    }
    if (mu <= 0.0) {
      restoreBest();
      return finish(SdpStatus::SlowProgress,
                    "complementarity lost positivity; best iterate returned");
    }

    // Infeasibility certificates from diverging iterates.
    double objScale = 1.0 + sp.bNormInf + sp.cNormInf;
    if (dobj > 1e3 * objScale && dobj > 0.0) {
      double lmaxAstar = 0.0;
      applyAStar(y, Q);
      for (int j = 0; j < nb; ++j) {
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(Q[static_cast<std::size_t>(j)],
                                                   Eigen::EigenvaluesOnly);
        lmaxAstar = std::max(lmaxAstar, es.eigenvalues().maxCoeff());
      }
      double bty = nf > 0 ? (sp.Bdense.transpose() * y).cwiseAbs().maxCoeff() : 0.0;
      if (lmaxAstar <= 1e-9 * dobj && bty <= 1e-9 * dobj)
        return finish(SdpStatus::PrimalInfeasible,
                      "Farkas certificate: dual improving ray found");
      if (dobj > 1e10 * objScale && dres <= 10 * opts.feasTol)
        ++divergeCountP;
      else
        divergeCountP = 0;
      if (divergeCountP >= 5)
        return finish(SdpStatus::PrimalInfeasible,
                      "dual objective diverging with small dual residual");
    }
    if (pobj < -1e3 * objScale) {
      double scale = -pobj;
      double rayRes = 0.0;
      for (int c = 0; c < m; ++c) {
        double ax = 0.0;
        for (const auto& [j, es] : sp.entries[static_cast<std::size_t>(c)])
          ax += symDot(es, X[static_cast<std::size_t>(j)]);
        for (const auto& [idx, v] : sp.freeEntries[static_cast<std::size_t>(c)])
          ax += v * f[idx];
        rayRes = std::max(rayRes, std::abs(ax) / scale);
      }
      if (rayRes <= 1e-9)
        return finish(SdpStatus::DualInfeasible,
                      "primal improving ray found (dual infeasible)");
      if (pobj < -1e10 * objScale && pres <= 10 * opts.feasTol)
        ++divergeCountD;
      else
        divergeCountD = 0;
      if (divergeCountD >= 5)
        return finish(SdpStatus::DualInfeasible,
                      "primal objective diverging with small primal residual");
    }

    // Factor S blocks.
    bool factorOk = true;
    for (int j = 0; j < nb && factorOk; ++j) {
      int n = sp.blockDims[static_cast<std::size_t>(j)];
      Eigen::LLT<MatrixXd> llt(S[static_cast<std::size_t>(j)]);
      if (llt.info() != Eigen::Success) {
        MatrixXd Sj = S[static_cast<std::size_t>(j)];
        Sj.diagonal().array() += 1e-13 * (1.0 + Sj.trace() / n);
        llt.compute(Sj);
        if (llt.info() != Eigen::Success) factorOk = false;
      }
      if (factorOk)
        Sinv[static_cast<std::size_t>(j)] = llt.solve(MatrixXd::Identity(n, n));
    }
    if (!factorOk)
      return finish(SdpStatus::SlowProgress, "dual slack block lost definiteness");

    // Schur complement M_{cd} = 1/2 tr[A_c (X A_d Sinv + Sinv A_d X)].
    M.setZero();
    for (int j = 0; j < nb; ++j) {
      const auto& cons = sp.blockConstraints[static_cast<std::size_t>(j)];
      const MatrixXd& Xj = X[static_cast<std::size_t>(j)];
      const MatrixXd& Zj = Sinv[static_cast<std::size_t>(j)];
      int n = sp.blockDims[static_cast<std::size_t>(j)];
      MatrixXd K(n, n), T(n, n);
      for (std::size_t di = 0; di < cons.size(); ++di) {
        int d = cons[di];
        const auto* ed = entriesFor(sp, d, j);
        K.setZero();
        for (const auto& e : *ed) {
          K.noalias() += e.value * (Xj.col(e.row) * Zj.row(e.col));
          if (e.row != e.col)
            K.noalias() += e.value * (Xj.col(e.col) * Zj.row(e.row));
        }
        T = 0.5 * (K + K.transpose());
        for (std::size_t ci = 0; ci <= di; ++ci) {
          int c = cons[ci];
          const auto* ec = entriesFor(sp, c, j);
          double v = symDot(*ec, T);
          M(c, d) += v;
          if (c != d) M(d, c) += v;
        }
      }
    }

    // Factor M with escalating diagonal regularization.
    double mScale = std::max(1.0, M.diagonal().cwiseAbs().maxCoeff());
    double reg = 1e-12 * mScale;
    bool mOk = false;
    for (int attempt = 0; attempt < 4 && !mOk; ++attempt) {
      MatrixXd Mreg = M;
      Mreg.diagonal().array() += reg;
      mLLT.compute(Mreg);
      if (mLLT.info() == Eigen::Success)
        mOk = true;
      else
        reg *= 1e3;
    }
    if (!mOk)
      return finish(SdpStatus::SlowProgress,
                    "Schur complement not positive definite despite regularization");

    if (nf > 0) {
      W = mLLT.solve(sp.Bdense);
      N = sp.Bdense.transpose() * W;
      double nScale = std::max(1.0, N.diagonal().cwiseAbs().maxCoeff());
      N.diagonal().array() += 1e-12 * nScale;
      nLDLT.compute(N);
    }

    auto solveAugmented = [&](const VectorXd& g, const VectorXd& rfree,
                              VectorXd& dy, VectorXd& df) {
      dy = VectorXd::Zero(m);
      df = VectorXd::Zero(nf);
      // Factor once, then refine against the unregularized system until the
      // augmented residual stops mattering.
      double gScale = 1.0 + g.cwiseAbs().maxCoeff();
      VectorXd res1 = g;
      VectorXd res2 = rfree;
      for (int pass = 0; pass < 5; ++pass) {
        VectorXd u = mLLT.solve(res1);
        VectorXd ddy, ddf;
        if (nf > 0) {
          ddf = nLDLT.solve(sp.Bdense.transpose() * u - res2);
          ddy = u - W * ddf;
        } else {
          ddy = u;
        }
        dy += ddy;
        if (nf > 0) df += ddf;
        res1 = g - M * dy;
        if (nf > 0) {
          res1 -= sp.Bdense * df;
          res2 = rfree - sp.Bdense.transpose() * dy;
        }
        double resNorm = res1.cwiseAbs().maxCoeff();
        if (nf > 0 && res2.size() > 0)
          resNorm = std::max(resNorm, res2.cwiseAbs().maxCoeff());
        if (resNorm <= 1e-14 * gScale) break;
      }
    };

    // Direction for a given sigma (and optional corrector cross term).
    auto computeDirection = [&](double sigma, bool corrector,
                                std::vector<MatrixXd>& outDX,
                                std::vector<MatrixXd>& outDS, VectorXd& dy,
                                VectorXd& df) {
      VectorXd g = rp;
      for (int j = 0; j < nb; ++j) {
        int n = sp.blockDims[static_cast<std::size_t>(j)];
        const MatrixXd& Xj = X[static_cast<std::size_t>(j)];
        const MatrixXd& Zj = Sinv[static_cast<std::size_t>(j)];
        MatrixXd P = -Xj;
        if (sigma > 0.0) P += sigma * mu * Zj;
        if (corrector) {
          MatrixXd cross = dXa[static_cast<std::size_t>(j)] *
                           dSa[static_cast<std::size_t>(j)] * Zj;
          P -= 0.5 * (cross + cross.transpose());
        }
        MatrixXd xrz = Xj * Rd[static_cast<std::size_t>(j)] * Zj;
        P -= 0.5 * (xrz + xrz.transpose());
        Q[static_cast<std::size_t>(j)] = P;  // reuse storage for <A, P>
        (void)n;
      }
      for (int c = 0; c < m; ++c) {
        double ap = 0.0;
        for (const auto& [j, es] : sp.entries[static_cast<std::size_t>(c)])
          ap += symDot(es, Q[static_cast<std::size_t>(j)]);
        g[c] -= ap;
      }
      solveAugmented(g, rf, dy, df);
      applyAStar(dy, outDS);
      for (int j = 0; j < nb; ++j) {
        outDS[static_cast<std::size_t>(j)] =
            Rd[static_cast<std::size_t>(j)] - outDS[static_cast<std::size_t>(j)];
        const MatrixXd& Xj = X[static_cast<std::size_t>(j)];
        const MatrixXd& Zj = Sinv[static_cast<std::size_t>(j)];
        MatrixXd xdz = Xj * (Rd[static_cast<std::size_t>(j)] -
                             outDS[static_cast<std::size_t>(j)]) * Zj;
        outDX[static_cast<std::size_t>(j)] =
            Q[static_cast<std::size_t>(j)] + 0.5 * (xdz + xdz.transpose());
        outDX[static_cast<std::size_t>(j)] =
            0.5 * (outDX[static_cast<std::size_t>(j)] +
                   outDX[static_cast<std::size_t>(j)].transpose());
      }
    };

    // Predictor.
    VectorXd dyA, dfA;
    computeDirection(0.0, false, dXa, dSa, dyA, dfA);
    double apA = 1.0, adA = 1.0;
    for (int j = 0; j < nb; ++j) {
      apA = std::min(apA, maxStepLength(X[static_cast<std::size_t>(j)],
                                        dXa[static_cast<std::size_t>(j)]));
      adA = std::min(adA, maxStepLength(S[static_cast<std::size_t>(j)],
                                        dSa[static_cast<std::size_t>(j)]));
    }
    double muAff = 0.0;
    for (int j = 0; j < nb; ++j)
      muAff += (X[static_cast<std::size_t>(j)] + apA * dXa[static_cast<std::size_t>(j)])
                   .cwiseProduct(S[static_cast<std::size_t>(j)] +
                                 adA * dSa[static_cast<std::size_t>(j)])
                   .sum();
    muAff = std::max(muAff / totalDim, 0.0);
    double sigma = std::pow(muAff / std::max(mu, 1e-300), 3.0);
    sigma = std::clamp(sigma, 1e-10, 1.0);

    // Corrector.
    VectorXd dy, df;
    computeDirection(sigma, true, dX, dS, dy, df);
    double ap = opts.stepFraction, ad = opts.stepFraction;
    for (int j = 0; j < nb; ++j) {
      ap = std::min(ap, opts.stepFraction *
                            maxStepLength(X[static_cast<std::size_t>(j)],
                                          dX[static_cast<std::size_t>(j)]));
      ad = std::min(ad, opts.stepFraction *
                            maxStepLength(S[static_cast<std::size_t>(j)],
                                          dS[static_cast<std::size_t>(j)]));
    }
    ap = std::min(ap, 1.0);
    ad = std::min(ad, 1.0);

    for (int j = 0; j < nb; ++j) {
      X[static_cast<std::size_t>(j)] += ap * dX[static_cast<std::size_t>(j)];
      S[static_cast<std::size_t>(j)] += ad * dS[static_cast<std::size_t>(j)];
    }
    y += ad * dy;
    if (nf > 0) f += ap * df;

    sol.trace.back().stepPrimal = ap;
    sol.trace.back().stepDual = ad;
    if (opts.log)
      (*opts.log) << "  step primal " << ap << " dual " << ad << " sigma "
                  << sigma << "\n";

    if (ap < 1e-5 && ad < 1e-5)
      ++slowCount;
    else
      slowCount = 0;
    if (slowCount >= 5)
      return finish(SdpStatus::SlowProgress,
                    "step lengths collapsed for 5 consecutive iterations");
  }

  computeResiduals();
  double pobj = primalObjective();
  double dobj = sp.b.dot(y);
  double relGap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
  double pres = rp.cwiseAbs().maxCoeff() / (1.0 + sp.bNormInf);
  double dres = 0.0;
  for (int j = 0; j < nb; ++j)
    dres = std::max(dres, Rd[static_cast<std::size_t>(j)].cwiseAbs().maxCoeff());
  dres /= (1.0 + sp.cNormInf);
  if (relGap <= opts.gapTol && pres <= opts.feasTol && dres <= opts.feasTol)
    return finish(SdpStatus::Optimal, "converged at iteration limit");
  return finish(SdpStatus::IterationLimit, "iteration limit reached");
}

}  // namespace ebound
