#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ebound/soscert.hpp"
#include "ebound/system.hpp"

namespace ebound {

struct BoundOptions {
  bool timeIndependentV = false;
  bool terminalTimeOnly = false;
  bool integral = false;  // include the integrand in the decay constraint
  bool symmetryReduction = true;
  double gapTol = 1e-8;
  double feasTol = 1e-8;
  int maxIter = 200;
  double stateScale = 1.0;   // x -> c x rescale before assembly, undone after
  double stopTol = 1e-7;     // tightening stop rule
  std::string dumpSdpPath;   // write the assembled SDP when nonempty
  std::ostream* solverLog = nullptr;
};

struct BoundResult {
  int degree = 0;
  int iteration = 1;  // tightening round, 1-based
  double lambda = std::numeric_limits<double>::quiet_NaN();
  Polynomial V;
  SdpStatus status = SdpStatus::IterationLimit;
  double gap = 0.0;
  int iterations = 0;
  double wallTime = 0.0;
  std::string message;
  std::vector<SdpIterationRecord> trace;

  bool optimal() const { return status == SdpStatus::Optimal; }
};

// Assemble, solve and recover one bound certificate at degree d. Solver
// failures are reported through the status, never thrown.
BoundResult computeBound(const ProblemSpec& spec, int d,
                         const BoundOptions& opts = {});

// One solve per degree; degrees must be ascending.
std::vector<BoundResult> degreeSweep(const ProblemSpec& spec,
                                     const std::vector<int>& degrees,
                                     const BoundOptions& opts = {});

// Fixed-degree improvement: each round shrinks the spacetime domain to
// {Phi <= current bound} and re-solves, stopping at maxRounds, when the
// improvement drops below opts.stopTol, or on a non-optimal round.
std::vector<BoundResult> iterativeTighten(const ProblemSpec& spec, int d,
                                          int maxRounds,
                                          const BoundOptions& opts = {});

}  // namespace ebound
