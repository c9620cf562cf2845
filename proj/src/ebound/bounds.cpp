#include "ebound/bounds.hpp"

#include <chrono>
#include <fstream>

namespace ebound {

BoundResult computeBound(const ProblemSpec& spec, int d,
                         const BoundOptions& opts) {
  auto t0 = std::chrono::steady_clock::now();
  BoundResult result;
  result.degree = d;

  ProblemSpec working = opts.stateScale != 1.0
                            ? rescaleState(spec, opts.stateScale)
                            : spec;

  BoundSdpOptions asmOpts;
  asmOpts.timeIndependentV = opts.timeIndependentV;
  asmOpts.terminalTimeOnly = opts.terminalTimeOnly;
  asmOpts.useIntegrand = opts.integral;
  asmOpts.symmetryReduction = opts.symmetryReduction;
  SosAssembly assembly = assembleBoundSdp(working, d, asmOpts);

  if (!opts.dumpSdpPath.empty()) {
    std::ofstream out(opts.dumpSdpPath);
    if (!out) throw Error("cannot open '" + opts.dumpSdpPath + "' for writing");
    out << assembly.sdp.dumpSparse();
  }

  SdpOptions solverOpts;
  solverOpts.gapTol = opts.gapTol;
  solverOpts.feasTol = opts.feasTol;
  solverOpts.maxIter = opts.maxIter;
  solverOpts.log = opts.solverLog;
  SdpSolution solution = solveSdp(assembly.sdp, solverOpts);

  result.status = solution.status;
  result.gap = solution.gap;
  result.iterations = solution.iterations;
  result.trace = solution.trace;
  result.message = solution.message;
  if (solution.status == SdpStatus::PrimalInfeasible)
    result.message = "no certificate at this degree";

  if (solution.status != SdpStatus::PrimalInfeasible &&
      solution.status != SdpStatus::DualInfeasible) {
    RecoveredCertificate cert = recoverV(assembly, solution);
    result.lambda = cert.lambda;
    result.V = cert.V;
    if (opts.stateScale != 1.0) {
      // V was synthesized for y = x / c; express it back in x.
      Polynomial v = cert.V;
      for (const auto& sv : spec.stateVars) {
        int idx = v.indexOf(sv);
        if (idx >= 0) v = v.substituteScaled(idx, 1.0 / opts.stateScale);
      }
      result.V = v;
    }
  }

  auto t1 = std::chrono::steady_clock::now();
  result.wallTime = std::chrono::duration<double>(t1 - t0).count();
  return result;
}

std::vector<BoundResult> degreeSweep(const ProblemSpec& spec,
                                     const std::vector<int>& degrees,
                                     const BoundOptions& opts) {
  for (std::size_t i = 1; i < degrees.size(); ++i)
    if (degrees[i] <= degrees[i - 1])
      throw Error("degreeSweep requires strictly ascending degrees");
  std::vector<BoundResult> out;
  for (int d : degrees) out.push_back(computeBound(spec, d, opts));
  return out;
}

std::vector<BoundResult> iterativeTighten(const ProblemSpec& spec, int d,
                                          int maxRounds,
                                          const BoundOptions& opts) {
  if (maxRounds < 1) throw Error("iterativeTighten requires maxRounds >= 1");
  std::vector<BoundResult> rounds;
  BoundResult first = computeBound(spec, d, opts);
  first.iteration = 1;
  rounds.push_back(first);
  if (!first.optimal()) return rounds;

  const auto tx = spec.timeStateVars();
  Polynomial phi = spec.observable->embedded(tx);
  double lambda = first.lambda;
  for (int round = 2; round <= maxRounds; ++round) {
    ProblemSpec shrunk = spec;
    shrunk.omegaExtra.inequalities.push_back(
        Polynomial::constant(tx, lambda) - phi);
    BoundResult next = computeBound(shrunk, d, opts);
    next.iteration = round;
    rounds.push_back(next);
    if (!next.optimal()) break;
    double improvement = lambda - next.lambda;
    lambda = next.lambda;
    if (improvement < opts.stopTol) break;
  }
  return rounds;
}

}  // namespace ebound
