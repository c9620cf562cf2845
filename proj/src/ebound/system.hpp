#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ebound/polynomial.hpp"

namespace ebound {

// Points satisfying every inequality p >= 0 and every equality p == 0.
// Empty lists describe the whole space.
struct SemialgebraicSet {
  std::vector<Polynomial> inequalities;
  std::vector<Polynomial> equalities;

  bool contains(std::span<const double> point, double tol = 1e-9) const;
  bool empty() const { return inequalities.empty() && equalities.empty(); }
};

struct Horizon {
  bool finite = false;
  double t0 = 0.0;
  double T = 0.0;  // meaningful only when finite

  static Horizon infinite(double t0 = 0.0) { return {false, t0, 0.0}; }
  static Horizon upTo(double T, double t0 = 0.0);
};

using ScalarFn = std::function<double(double t, std::span<const double> x)>;

// Maps search parameters (each in [0,1]) onto the initial set; used by the
// trajectory lower-bound search.
struct InitialSampler {
  int paramCount = 0;
  std::function<std::vector<double>(std::span<const double>)> map;
};

// Dynamics, observable, sets and horizon of one bounding problem. All
// polynomials live over the shared variable list (t, x1..xn); initial-set
// polynomials are stored over (x1..xn) only. Immutable after validation.
struct ProblemSpec {
  std::string name;
  std::vector<std::string> stateVars;
  std::vector<Polynomial> dynamics;         // dx_i/dt over (t, x)
  std::optional<Polynomial> observable;     // polynomial observable, if any
  ScalarFn observableFn;                    // non-polynomial override
  std::optional<Polynomial> integrand;      // running-cost term, if any
  Horizon horizon;
  SemialgebraicSet initialSet;              // over x only
  SemialgebraicSet omegaExtra;              // over (t, x)
  std::optional<std::vector<int>> symmetrySigns;  // +-1 per state variable
  std::optional<InitialSampler> initialSampler;

  int stateDim() const { return static_cast<int>(stateVars.size()); }
  std::vector<std::string> timeStateVars() const;
  std::vector<std::string> stateOnlyVars() const { return stateVars; }
  int maxDynamicsDegree() const;
  bool autonomous() const;

  // Observable value at (t, x); prefers the override when present.
  double observe(double t, std::span<const double> x) const;
  bool hasPolynomialObservable() const { return observable.has_value(); }

  // Checks variable lists and, when symmetry is declared, the exact
  // polynomial identities F(t,Ax) = A F(t,x), Phi(t,Ax) = Phi(t,x) and
  // A-invariance of every set polynomial.
  void validate() const;
};

// d/dt of V along trajectories: dV/dt + F . grad_x V, fully expanded.
Polynomial lieDerivative(const Polynomial& V, const ProblemSpec& spec);

// Spacetime domain: user constraints plus the automatic time inequality,
// t - t0 >= 0 (infinite horizon) or (t - t0)(T - t) >= 0 (finite).
SemialgebraicSet buildOmega(const ProblemSpec& spec);

// Galerkin truncation of the Burgers equation onto N sine modes, with the
// projected enstrophy observable and the alternating sign symmetry.
ProblemSpec burgersTruncation(int N, double phi0 = 1.0,
                              bool localDomain = false);

// Named benchmark problems. Recognized names: nonautonomous2d, quadratic1d,
// cubicSemistable1d, unstableFocus2d, vanDerPol, burgers.
ProblemSpec builtinProblem(const std::string& name,
                           const std::map<std::string, std::string>& params = {});

std::vector<std::string> builtinProblemNames();

// State rescale x -> c*x applied to every polynomial; inverse of the
// recovered V is handled by the bound pipeline.
ProblemSpec rescaleState(const ProblemSpec& spec, double factor);

// Adds an auxiliary state z with zdot = Psi, z(t0) = 0, and replaces the
// observable by Phi + z; used for integral-augmented bounds.
ProblemSpec augmentWithIntegral(const ProblemSpec& spec);

}  // namespace ebound
