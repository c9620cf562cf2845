#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ebound/system.hpp"

namespace ebound {

struct IntegrateOptions {
  double relTol = 1e-10;
  double absTol = 1e-12;
  double normCap = 1e8;
  double initialStep = 0.0;  // 0: automatic
  double maxStep = std::numeric_limits<double>::infinity();
  long maxSteps = 20000000;
};

// One trajectory with per-step dense-output coefficients, so states and the
// observable can be evaluated anywhere inside the covered time range.
class Trajectory {
public:
  int dim() const { return dim_; }
  const std::vector<double>& times() const { return times_; }
  double startTime() const { return times_.front(); }
  double endTime() const { return times_.back(); }
  std::span<const double> stateAt(std::size_t index) const;
  std::vector<double> at(double t) const;  // dense-output evaluation
  bool blewUp() const { return blowup_; }
  double escapeTime() const { return escapeTime_; }
  std::size_t stepCount() const { return times_.size() - 1; }

  // Maximum of a scalar along the trajectory: coarse scan over dense output
  // followed by golden-section refinement. Returns {value, time}.
  std::pair<double, double> maxOf(
      const std::function<double(double, std::span<const double>)>& fn,
      int samplesPerStep = 8) const;

  void writeCsv(const std::string& path, const ProblemSpec& spec) const;

private:
  friend Trajectory integrate(const ProblemSpec&, std::span<const double>,
                              double, const IntegrateOptions&);
  int dim_ = 0;
  std::vector<double> times_;   // step boundaries, strictly increasing
  std::vector<double> states_;  // (steps+1) * dim
  std::vector<double> dense_;   // steps * 5 * dim interpolation coefficients
  bool blowup_ = false;
  double escapeTime_ = 0.0;

  std::size_t stepIndex(double t) const;
};

// Embedded Dormand-Prince 5(4) pair with PI step-size control and dense
// output. Integration starts at the problem's t0 and stops at tEnd, at the
// norm cap (blowup flagged), or with an error on step-size underflow.
Trajectory integrate(const ProblemSpec& spec, std::span<const double> x0,
                     double tEnd, const IntegrateOptions& opts = {});

struct LowerBoundOptions {
  int multistarts = 32;
  int localIterations = 200;
  double tEnd = 0.0;  // 0: horizon T, or automatic extension when infinite
  std::uint64_t seed = 0;
  IntegrateOptions integration;
};

struct LowerBoundResult {
  double value = -std::numeric_limits<double>::infinity();
  std::vector<double> argX0;
  double argTime = 0.0;
  int evaluations = 0;
};

// Derivative-free multistart maximization of max_t Phi over the initial
// set's parameterization. A valid lower bound on the extreme value, not a
// certified global optimum. Deterministic for a fixed seed.
LowerBoundResult lowerBound(const ProblemSpec& spec,
                            const LowerBoundOptions& opts = {});

// Candidate auxiliary function for grid certification: a polynomial (exact
// Lie derivative) or a generic differentiable scalar function (central
// differences, step 1e-6).
struct CertificateFunction {
  std::optional<Polynomial> poly;  // over (t, x) or x
  ScalarFn fn;

  static CertificateFunction fromPolynomial(Polynomial p);
  static CertificateFunction fromFunction(ScalarFn f);
  double value(double t, std::span<const double> x,
               const ProblemSpec& spec) const;
};

struct GridSpec {
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<int> res;  // nodes per axis, >= 1

  long nodeCount() const;
  void validate(std::size_t expectedAxes) const;
};

struct CertificateReport {
  double maxLieViolation = 0.0;
  std::vector<double> lieArgmax;
  double maxPhiViolation = 0.0;
  std::vector<double> phiArgmax;
  long gridSize = 0;
  double tol = 0.0;
  bool pass = false;
};

// Grid check of the two admissibility conditions: LV <= tol and
// Phi - V <= tol over a box in (t, x).
CertificateReport checkCertificate(const CertificateFunction& V,
                                   const ProblemSpec& spec,
                                   const GridSpec& grid, double tol);

struct LimitCycleOptions {
  double transientTime = 80.0;
  double maxTime = 600.0;
  double periodRelTol = 1e-8;
  IntegrateOptions integration;
};

// Settles onto an attracting periodic orbit (two-state autonomous systems),
// detects the period from Poincare-section returns, and reports the maximum
// of the observable over one period. Throws if no stable period is found.
double maxOnLimitCycle(const ProblemSpec& spec,
                       const LimitCycleOptions& opts = {});

}  // namespace ebound
