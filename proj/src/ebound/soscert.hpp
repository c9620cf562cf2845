#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ebound/polynomial.hpp"
#include "ebound/sdpsolve.hpp"
#include "ebound/system.hpp"

namespace ebound {

// All monomials of total degree <= degree over numVars variables, in graded
// lexicographic order: {1, t, x, t^2, t*x, x^2, ...}.
std::vector<Monomial> monomialBasis(int numVars, int degree);

// Same, restricted to one parity class of a diagonal sign symmetry: signs
// holds +-1 per variable and a monomial belongs to class 0 (even) or 1 (odd)
// according to the parity of its total degree in the sign-flipped variables.
std::vector<Monomial> monomialBasis(int numVars, int degree,
                                    std::span<const int> signs, int parity);

int monomialParity(const Monomial& m, std::span<const int> signs);

// Coefficient affine in the decision scalars: constant + sum coef_k f_k.
struct AffineCoeff {
  double constant = 0.0;
  std::vector<std::pair<int, double>> terms;
};

// Polynomial whose coefficients are affine in decision scalars.
using AffinePoly = std::map<Monomial, AffineCoeff, GradedLexLess>;

void affineAddPoly(AffinePoly& dst, const Polynomial& p, double scale);
void affineAddScalarTimesPoly(AffinePoly& dst, int scalar, const Polynomial& p,
                              double scale);

struct GramBlockDesc {
  int blockIndex;
  std::vector<Monomial> basis;
  Polynomial weight;  // 1 for the main SOS part, h_i for inequality weights
  std::string label;
};

struct FreeMultiplierDesc {
  int firstScalar;
  std::vector<Monomial> basis;
  Polynomial weight;  // l_i
  std::string label;
};

// One weighted-SOS membership constraint after S-procedure expansion:
// target = sos0 + sum_i h_i sos_i + sum_i l_i rho_i, matched coefficientwise.
struct WsosConstraintRecord {
  std::string name;
  std::vector<std::string> scopeVars;
  int degree;  // mu
  AffinePoly target;
  std::vector<GramBlockDesc> grams;
  std::vector<FreeMultiplierDesc> multipliers;
  std::vector<Monomial> rowMonomials;  // one matching equation per entry
  int firstRow = 0;
};

// Incremental builder for the block SDP behind a set of WSOS constraints.
class SosAssembler {
public:
  int newScalar();  // returns the scalar index
  int scalarCount() const { return numScalars_; }

  // Appends the S-procedure expansion of: target in WSOS_mu(set), over
  // scopeVars. When signs is nonempty the target is assumed invariant and
  // Gram blocks split into even/odd parity sub-blocks with invariant
  // multipliers. Multipliers whose degree budget is negative are omitted
  // with a warning.
  WsosConstraintRecord& addConstraint(const std::string& name,
                                      std::vector<std::string> scopeVars,
                                      AffinePoly target,
                                      const SemialgebraicSet& set, int mu,
                                      std::span<const int> signs = {});

  void setObjective(std::vector<double> freeCost);
  SdpProblem& sdp() { return sdp_; }
  const SdpProblem& sdp() const { return sdp_; }
  const std::vector<WsosConstraintRecord>& constraints() const {
    return records_;
  }
  const std::vector<std::string>& warnings() const { return warnings_; }

private:
  SdpProblem sdp_;
  std::vector<WsosConstraintRecord> records_;
  std::vector<std::string> warnings_;
  int numScalars_ = 0;
};

// Full assembly of the bound problem at degree d: decision scalars are
// lambda and the coefficients of V, with constraints
//   -dV/dt - F.grad V (- Psi)      in WSOS over the spacetime domain,
//   V - Phi                        in WSOS over the spacetime domain,
//   lambda - V(t0, .)              in WSOS over the initial set,
// and objective: minimize lambda.
struct BoundSdpOptions {
  bool timeIndependentV = false;
  bool terminalTimeOnly = false;
  bool useIntegrand = false;  // replace first target by -(LV + Psi)
  bool symmetryReduction = true;
};

struct SosAssembly {
  SdpProblem sdp;
  std::vector<std::string> vVars;
  std::vector<Monomial> vBasis;
  int lambdaScalar = 0;
  std::vector<int> vScalars;
  std::vector<WsosConstraintRecord> constraints;
  std::vector<std::string> warnings;
  int degree = 0;
};

SosAssembly assembleBoundSdp(const ProblemSpec& spec, int d,
                             const BoundSdpOptions& opts = {});

// Reads lambda and V out of a solved assembly. Throws when the solution
// carries no usable primal point (infeasible statuses).
struct RecoveredCertificate {
  double lambda;
  Polynomial V;
};
RecoveredCertificate recoverV(const SosAssembly& assembly,
                              const SdpSolution& solution);

// Residual of one matched identity, evaluated from a concrete solution;
// the maximum absolute coefficient of (reconstruction - target).
double constraintResidual(const WsosConstraintRecord& record,
                          const SdpSolution& solution,
                          std::span<const double> freeValues);

}  // namespace ebound
