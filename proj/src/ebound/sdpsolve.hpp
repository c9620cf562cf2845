#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

namespace ebound {

// Standard-form problem over symmetric blocks X_j >= 0 and free scalars f:
//
//   minimize    freeCost . f + sum_j <costBlocks_j, X_j>
//   subject to  sum_j <A_cj, X_j> + B_c . f = rhs_c,   c = 1..m
//
// Matrix entries are stored once per (row <= col) pair and applied
// symmetrically, matching <A, X> = sum_ab A_ab X_ab.
struct SdpConstraint {
  struct MatrixEntry {
    int block;
    int row;
    int col;
    double value;
  };
  std::vector<MatrixEntry> matrixEntries;
  std::vector<std::pair<int, double>> freeEntries;
  double rhs = 0.0;
};

struct SdpProblem {
  std::vector<int> blockDims;
  int numFree = 0;
  std::vector<double> freeCost;                // empty means all zeros
  std::vector<Eigen::MatrixXd> costBlocks;     // empty means all zero blocks
  std::vector<SdpConstraint> constraints;

  int numConstraints() const { return static_cast<int>(constraints.size()); }
  void validate() const;
  // Sparse text dump (block sizes, then one line per nonzero); format is
  // described in the repository documentation.
  std::string dumpSparse() const;
};

enum class SdpStatus {
  Optimal,
  PrimalInfeasible,
  DualInfeasible,
  SlowProgress,
  IterationLimit,
};

std::string statusName(SdpStatus status);
std::ostream& operator<<(std::ostream& out, SdpStatus status);

struct SdpIterationRecord {
  int iteration;
  double mu;
  double relGap;
  double primalResidual;
  double dualResidual;
  double stepPrimal;
  double stepDual;
};

struct SdpSolution {
  SdpStatus status = SdpStatus::IterationLimit;
  std::vector<Eigen::MatrixXd> X;   // primal blocks
  std::vector<double> freeValues;   // primal free scalars
  Eigen::VectorXd y;                // dual multipliers
  std::vector<Eigen::MatrixXd> S;   // dual slack blocks
  double primalObjective = 0.0;
  double dualObjective = 0.0;
  double gap = 0.0;                 // relative duality gap at exit
  int iterations = 0;
  std::vector<SdpIterationRecord> trace;
  std::string message;
};

struct SdpOptions {
  double gapTol = 1e-8;
  double feasTol = 1e-8;
  int maxIter = 200;
  double stepFraction = 0.98;
  std::ostream* log = nullptr;  // verbose per-iteration log when set
};

// Primal-dual path-following solve (symmetrized HKM directions with a
// Mehrotra predictor-corrector). Never throws on numerical trouble; all
// failure modes map to a status.
SdpSolution solveSdp(const SdpProblem& problem, const SdpOptions& opts = {});

}  // namespace ebound
