#include "ebound/soscert.hpp"

#include <algorithm>
#include <set>

namespace ebound {

namespace {

void enumerate(int numVars, int var, int remaining, bool exact,
               std::vector<std::pair<int, int>>& current,
               std::vector<Monomial>& out) {
  if (var == numVars) {
    if (!exact || remaining == 0) out.push_back(Monomial(current));
    return;
  }
  // Largest exponent on the earliest variable first (graded-lex layer order).
  for (int e = remaining; e >= 0; --e) {
    if (e > 0) current.emplace_back(var, e);
    enumerate(numVars, var + 1, remaining - e, exact, current, out);
    if (e > 0) current.pop_back();
  }
}

std::vector<Monomial> layer(int numVars, int degree) {
  std::vector<Monomial> out;
  std::vector<std::pair<int, int>> current;
  enumerate(numVars, 0, degree, true, current, out);
  return out;
}

}  // namespace

std::vector<Monomial> monomialBasis(int numVars, int degree) {
  std::vector<Monomial> out;
  for (int d = 0; d <= degree; ++d) {
    auto l = layer(numVars, d);
    out.insert(out.end(), l.begin(), l.end());
  }
  return out;
}

int monomialParity(const Monomial& m, std::span<const int> signs) {
  int parity = 0;
  for (const auto& [var, exp] : m.factors())
    if (signs[static_cast<std::size_t>(var)] < 0) parity += exp;
  return parity & 1;
}

std::vector<Monomial> monomialBasis(int numVars, int degree,
                                    std::span<const int> signs, int parity) {
  std::vector<Monomial> out;
  for (auto& m : monomialBasis(numVars, degree))
    if (monomialParity(m, signs) == parity) out.push_back(std::move(m));
  return out;
}

void affineAddPoly(AffinePoly& dst, const Polynomial& p, double scale) {
  for (const auto& [m, c] : p.terms()) dst[m].constant += scale * c;
}

void affineAddScalarTimesPoly(AffinePoly& dst, int scalar, const Polynomial& p,
                              double scale) {
  for (const auto& [m, c] : p.terms()) {
    auto& coeff = dst[m];
    auto it = std::find_if(coeff.terms.begin(), coeff.terms.end(),
                           [&](const auto& pr) { return pr.first == scalar; });
    if (it == coeff.terms.end())
      coeff.terms.emplace_back(scalar, scale * c);
    else
      it->second += scale * c;
  }
}

int SosAssembler::newScalar() {
  sdp_.numFree = ++numScalars_;
  return numScalars_ - 1;
}

void SosAssembler::setObjective(std::vector<double> freeCost) {
  freeCost.resize(static_cast<std::size_t>(numScalars_), 0.0);
  sdp_.freeCost = std::move(freeCost);
}

WsosConstraintRecord& SosAssembler::addConstraint(
    const std::string& name, std::vector<std::string> scopeVars,
    AffinePoly target, const SemialgebraicSet& set, int mu,
    std::span<const int> signs) {
  WsosConstraintRecord rec;
  rec.name = name;
  rec.scopeVars = scopeVars;
  rec.degree = mu;
  const int numVars = static_cast<int>(scopeVars.size());
  const bool symmetric = !signs.empty();

  Polynomial one = Polynomial::constant(scopeVars, 1.0);

  // Candidate Gram bases and free multipliers, before block allocation.
  struct GramCandidate {
    std::vector<Monomial> basis;
    Polynomial weight;
    std::string label;
  };
  std::vector<GramCandidate> grams;
  auto addGram = [&](const Polynomial& weight, int budget,
                     const std::string& label) {
    auto emit = [&](std::vector<Monomial> basis, const std::string& sub) {
      if (basis.empty()) return;
      grams.push_back({std::move(basis), weight, label + sub});
    };
    int basisDeg = budget / 2;
    if (symmetric) {
      emit(monomialBasis(numVars, basisDeg, signs, 0), "/even");
      emit(monomialBasis(numVars, basisDeg, signs, 1), "/odd");
    } else {
      emit(monomialBasis(numVars, basisDeg), "");
    }
  };

  addGram(one, mu, "sos0");
  for (std::size_t i = 0; i < set.inequalities.size(); ++i) {
    Polynomial h = set.inequalities[i].embedded(scopeVars);
    int budget = mu - h.degree();
    if (budget < 0) {
      warnings_.push_back(name + ": inequality multiplier " +
                          std::to_string(i + 1) +
                          " omitted (degree budget " + std::to_string(budget) +
                          " < 0)");
      continue;
    }
    addGram(h, budget, "ineq" + std::to_string(i + 1));
  }
  for (std::size_t i = 0; i < set.equalities.size(); ++i) {
    Polynomial l = set.equalities[i].embedded(scopeVars);
    int budget = mu - l.degree();
    if (budget < 0) {
      warnings_.push_back(name + ": equality multiplier " +
                          std::to_string(i + 1) +
                          " omitted (degree budget " + std::to_string(budget) +
                          " < 0)");
      continue;
    }
    FreeMultiplierDesc d;
    d.basis = symmetric ? monomialBasis(numVars, budget, signs, 0)
                        : monomialBasis(numVars, budget);
    d.weight = l;
    d.label = "eq" + std::to_string(i + 1);
    d.firstScalar = -1;  // assigned after reduction
    rec.multipliers.push_back(std::move(d));
  }

  // Diagonal basis reduction: a basis element whose squared product (for
  // some weight term) can be matched by nothing else forces a zero Gram
  // diagonal, so the whole row must vanish; drop it and iterate. This
  // removes the structurally empty interior that such monomials create.
  for (bool changed = true; changed;) {
    changed = false;
    std::map<Monomial, std::pair<int, bool>, GradedLexLess> contrib;
    auto bump = [&](const Monomial& m, bool other) {
      auto& e = contrib[m];
      if (other)
        e.second = true;
      else
        ++e.first;
    };
    for (const auto& g : grams)
      for (std::size_t a = 0; a < g.basis.size(); ++a)
        for (std::size_t b = a; b < g.basis.size(); ++b) {
          Monomial prod = g.basis[a].times(g.basis[b]);
          for (const auto& [gm, gc] : g.weight.terms()) {
            (void)gc;
            bump(prod.times(gm), false);
          }
        }
    for (const auto& d : rec.multipliers)
      for (const auto& bm : d.basis)
        for (const auto& [wm, wc] : d.weight.terms()) {
          (void)wc;
          bump(bm.times(wm), true);
        }
    for (const auto& [m, coeff] : target)
      if (coeff.constant != 0.0 || !coeff.terms.empty()) bump(m, true);

    for (auto& g : grams) {
      for (std::size_t a = 0; a < g.basis.size(); ++a) {
        bool removable = false;
        Monomial sq = g.basis[a].times(g.basis[a]);
        for (const auto& [gm, gc] : g.weight.terms()) {
          (void)gc;
          const auto& e = contrib.at(sq.times(gm));
          if (e.first == 1 && !e.second) {
            removable = true;
            break;
          }
        }
        if (removable) {
          g.basis.erase(g.basis.begin() + static_cast<long>(a));
          changed = true;
          break;
        }
      }
      if (changed) break;
    }
  }

  // Allocate Gram blocks and multiplier scalars.
  for (auto& g : grams) {
    if (g.basis.empty()) continue;
    GramBlockDesc desc;
    desc.basis = std::move(g.basis);
    desc.weight = g.weight;
    desc.label = g.label;
    desc.blockIndex = static_cast<int>(sdp_.blockDims.size());
    sdp_.blockDims.push_back(static_cast<int>(desc.basis.size()));
    rec.grams.push_back(std::move(desc));
  }
  for (auto& d : rec.multipliers) {
    d.firstScalar = numScalars_;
    for (std::size_t k = 0; k < d.basis.size(); ++k) newScalar();
  }

  // Pass 1: collect every monomial reachable by either side.
  std::set<Monomial, GradedLexLess> rows;
  for (const auto& [m, coeff] : target) {
    if (coeff.constant != 0.0 || !coeff.terms.empty()) rows.insert(m);
  }
  for (const auto& g : rec.grams) {
    const auto n = g.basis.size();
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a; b < n; ++b) {
        Monomial prod = g.basis[a].times(g.basis[b]);
        for (const auto& [gm, gc] : g.weight.terms()) {
          (void)gc;
          rows.insert(prod.times(gm));
        }
      }
  }
  for (const auto& d : rec.multipliers)
    for (const auto& bm : d.basis)
      for (const auto& [wm, wc] : d.weight.terms()) {
        (void)wc;
        rows.insert(bm.times(wm));
      }

  rec.rowMonomials.assign(rows.begin(), rows.end());
  std::map<Monomial, int, GradedLexLess> rowIndex;
  rec.firstRow = static_cast<int>(sdp_.constraints.size());
  for (std::size_t r = 0; r < rec.rowMonomials.size(); ++r) {
    rowIndex[rec.rowMonomials[r]] = rec.firstRow + static_cast<int>(r);
    sdp_.constraints.emplace_back();
  }

  // Pass 2: emit matching equations
  //   [sos0 + sum h_i sos_i + sum l_i rho_i - target]_alpha = 0.
  for (const auto& g : rec.grams) {
    const auto n = g.basis.size();
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a; b < n; ++b) {
        Monomial prod = g.basis[a].times(g.basis[b]);
        for (const auto& [gm, gc] : g.weight.terms()) {
          int row = rowIndex.at(prod.times(gm));
          sdp_.constraints[static_cast<std::size_t>(row)].matrixEntries.push_back(
              {g.blockIndex, static_cast<int>(a), static_cast<int>(b), gc});
        }
      }
  }
  for (const auto& d : rec.multipliers)
    for (std::size_t k = 0; k < d.basis.size(); ++k)
      for (const auto& [wm, wc] : d.weight.terms()) {
        int row = rowIndex.at(d.basis[k].times(wm));
        sdp_.constraints[static_cast<std::size_t>(row)].freeEntries.emplace_back(
            d.firstScalar + static_cast<int>(k), wc);
      }
  for (const auto& [m, coeff] : target) {
    auto it = rowIndex.find(m);
    if (it == rowIndex.end()) continue;
    auto& con = sdp_.constraints[static_cast<std::size_t>(it->second)];
    con.rhs += coeff.constant;
    for (const auto& [scalar, c] : coeff.terms)
      con.freeEntries.emplace_back(scalar, -c);
  }

  rec.target = std::move(target);
  records_.push_back(std::move(rec));
  return records_.back();
}

namespace {

// Re-expresses p over narrower variables; requires that dropped variables do
// not occur in any term.
Polynomial projected(const Polynomial& p, std::vector<std::string> narrow) {
  Polynomial out(narrow);
  std::vector<int> map(p.variables().size(), -1);
  for (std::size_t i = 0; i < p.variables().size(); ++i) {
    auto it = std::find(narrow.begin(), narrow.end(), p.variables()[i]);
    if (it != narrow.end()) map[i] = static_cast<int>(it - narrow.begin());
  }
  Polynomial::TermMap terms;
  for (const auto& [m, c] : p.terms()) {
    std::vector<std::pair<int, int>> fac;
    for (const auto& [var, exp] : m.factors()) {
      if (map[static_cast<std::size_t>(var)] < 0)
        throw Error("polynomial depends on variable '" +
                    p.variables()[static_cast<std::size_t>(var)] +
                    "' outside the requested scope");
      fac.emplace_back(map[static_cast<std::size_t>(var)], exp);
    }
    terms[Monomial(std::move(fac))] = c;
  }
  return Polynomial::fromTerms(std::move(narrow), std::move(terms));
}

}  // namespace

SosAssembly assembleBoundSdp(const ProblemSpec& spec, int d,
                             const BoundSdpOptions& opts) {
  spec.validate();
  if (!spec.hasPolynomialObservable())
    throw Error("SOS bound synthesis requires a polynomial observable");
  const auto tx = spec.timeStateVars();
  const auto xs = spec.stateOnlyVars();
  Polynomial phi = spec.observable->embedded(tx);
  if (d < phi.degree())
    throw Error("degree " + std::to_string(d) +
                " is below the observable degree " +
                std::to_string(phi.degree()));
  if (opts.terminalTimeOnly && !spec.horizon.finite)
    throw Error("terminal-time bounds need a finite horizon");
  if (opts.useIntegrand && !spec.integrand)
    throw Error("integral bound requested but the problem has no integrand");

  const bool symmetric = opts.symmetryReduction && spec.symmetrySigns.has_value();
  std::vector<int> signsTx, signsX;
  if (symmetric) {
    signsX = *spec.symmetrySigns;
    signsTx.push_back(1);  // t is untouched by the involution
    signsTx.insert(signsTx.end(), signsX.begin(), signsX.end());
  }

  // Scope of the first two constraints: with a time-independent V on an
  // infinite horizon whose data are all autonomous the t variable carries no
  // information and both collapse to state-space constraints.
  bool tFree = spec.autonomous() && !spec.observable->embedded(tx).dependsOn(0);
  if (opts.useIntegrand) tFree = tFree && !spec.integrand->embedded(tx).dependsOn(0);
  for (const auto& p : spec.omegaExtra.inequalities)
    tFree = tFree && !p.embedded(tx).dependsOn(p.embedded(tx).indexOf("t"));
  for (const auto& p : spec.omegaExtra.equalities)
    tFree = tFree && !p.embedded(tx).dependsOn(p.embedded(tx).indexOf("t"));
  const bool dropTime =
      opts.timeIndependentV && !spec.horizon.finite && tFree;

  SosAssembly out;
  out.degree = d;
  out.vVars = opts.timeIndependentV ? xs : tx;
  std::span<const int> vSigns =
      symmetric ? (opts.timeIndependentV ? std::span<const int>(signsX)
                                         : std::span<const int>(signsTx))
                : std::span<const int>();
  out.vBasis = symmetric
                   ? monomialBasis(static_cast<int>(out.vVars.size()), d, vSigns, 0)
                   : monomialBasis(static_cast<int>(out.vVars.size()), d);

  SosAssembler assembler;
  out.lambdaScalar = assembler.newScalar();
  for (std::size_t k = 0; k < out.vBasis.size(); ++k)
    out.vScalars.push_back(assembler.newScalar());

  // Lie constraint: -dtV - F.gradV (- Psi) in WSOS over Omega.
  {
    std::vector<std::string> scope = dropTime ? xs : tx;
    AffinePoly target;
    for (std::size_t k = 0; k < out.vBasis.size(); ++k) {
      Polynomial mono = Polynomial::fromTerms(out.vVars, {{out.vBasis[k], 1.0}});
      Polynomial lv = lieDerivative(mono, spec);
      if (dropTime) lv = projected(lv, scope);
      affineAddScalarTimesPoly(target, out.vScalars[k], lv, -1.0);
    }
    if (opts.useIntegrand) {
      Polynomial psi = spec.integrand->embedded(tx);
      if (dropTime) psi = projected(psi, scope);
      affineAddPoly(target, psi, -1.0);
    }
    SemialgebraicSet domain;
    if (dropTime) {
      for (const auto& p : spec.omegaExtra.inequalities)
        domain.inequalities.push_back(projected(p.embedded(tx), scope));
      for (const auto& p : spec.omegaExtra.equalities)
        domain.equalities.push_back(projected(p.embedded(tx), scope));
    } else {
      domain = buildOmega(spec);
    }
    int mu = d - 1 + std::max(spec.maxDynamicsDegree(), 1);
    std::span<const int> signs;
    if (symmetric) signs = dropTime ? std::span<const int>(signsX)
                                    : std::span<const int>(signsTx);
    assembler.addConstraint("lie", scope, std::move(target), domain, mu, signs);
  }

  // Dominance constraint: V - Phi in WSOS over Omega, or its terminal-time
  // weakening V(T,.) - Phi(T,.) in WSOS over the time-T slice of Omega.
  if (opts.terminalTimeOnly) {
    const double T = spec.horizon.T;
    AffinePoly target;
    for (std::size_t k = 0; k < out.vBasis.size(); ++k) {
      Polynomial mono = Polynomial::fromTerms(out.vVars, {{out.vBasis[k], 1.0}});
      Polynomial atT = opts.timeIndependentV
                           ? mono
                           : projected(mono.embedded(tx).substitute(0, T), xs);
      affineAddScalarTimesPoly(target, out.vScalars[k], atT, 1.0);
    }
    affineAddPoly(target, projected(phi.substitute(0, T), xs), -1.0);
    SemialgebraicSet slice;
    for (const auto& p : spec.omegaExtra.inequalities)
      slice.inequalities.push_back(projected(p.embedded(tx).substitute(0, T), xs));
    for (const auto& p : spec.omegaExtra.equalities)
      slice.equalities.push_back(projected(p.embedded(tx).substitute(0, T), xs));
    std::span<const int> signs;
    if (symmetric) signs = signsX;
    assembler.addConstraint("dominance", xs, std::move(target), slice, d, signs);
  } else {
    std::vector<std::string> scope = dropTime ? xs : tx;
    AffinePoly target;
    for (std::size_t k = 0; k < out.vBasis.size(); ++k) {
      Polynomial mono = Polynomial::fromTerms(out.vVars, {{out.vBasis[k], 1.0}});
      if (!dropTime) mono = mono.embedded(tx);
      affineAddScalarTimesPoly(target, out.vScalars[k], mono, 1.0);
    }
    Polynomial phiScoped = dropTime ? projected(phi, scope) : phi;
    affineAddPoly(target, phiScoped, -1.0);
    SemialgebraicSet domain;
    if (dropTime) {
      for (const auto& p : spec.omegaExtra.inequalities)
        domain.inequalities.push_back(projected(p.embedded(tx), scope));
      for (const auto& p : spec.omegaExtra.equalities)
        domain.equalities.push_back(projected(p.embedded(tx), scope));
    } else {
      domain = buildOmega(spec);
    }
    std::span<const int> signs;
    if (symmetric) signs = dropTime ? std::span<const int>(signsX)
                                    : std::span<const int>(signsTx);
    assembler.addConstraint("dominance", scope, std::move(target), domain, d,
                            signs);
  }

  // Initial constraint: lambda - V(t0, .) in WSOS over X0.
  {
    AffinePoly target;
    AffineCoeff lambdaCoeff;
    lambdaCoeff.terms.emplace_back(out.lambdaScalar, 1.0);
    target[Monomial::one()] = lambdaCoeff;
    const double t0 = spec.horizon.t0;
    for (std::size_t k = 0; k < out.vBasis.size(); ++k) {
      Polynomial mono = Polynomial::fromTerms(out.vVars, {{out.vBasis[k], 1.0}});
      Polynomial atT0 = opts.timeIndependentV
                            ? mono
                            : projected(mono.embedded(tx).substitute(0, t0), xs);
      affineAddScalarTimesPoly(target, out.vScalars[k], atT0, -1.0);
    }
    std::span<const int> signs;
    if (symmetric) signs = signsX;
    assembler.addConstraint("initial", xs, std::move(target), spec.initialSet,
                            d, signs);
  }

  std::vector<double> cost(static_cast<std::size_t>(assembler.scalarCount()), 0.0);
  cost[static_cast<std::size_t>(out.lambdaScalar)] = 1.0;
  assembler.setObjective(std::move(cost));

  out.sdp = std::move(assembler.sdp());
  out.constraints = assembler.constraints();
  out.warnings = assembler.warnings();
  return out;
}

RecoveredCertificate recoverV(const SosAssembly& assembly,
                              const SdpSolution& solution) {
  if (solution.status == SdpStatus::PrimalInfeasible ||
      solution.status == SdpStatus::DualInfeasible)
    throw Error("no certificate to recover: solver reported " +
                statusName(solution.status));
  if (solution.freeValues.size() <
      assembly.vScalars.size() + 1)
    throw Error("solution is missing decision variables");
  RecoveredCertificate cert;
  cert.lambda =
      solution.freeValues[static_cast<std::size_t>(assembly.lambdaScalar)];
  Polynomial::TermMap terms;
  for (std::size_t k = 0; k < assembly.vBasis.size(); ++k) {
    double c = solution.freeValues[static_cast<std::size_t>(assembly.vScalars[k])];
    if (c != 0.0) terms[assembly.vBasis[k]] = c;
  }
  cert.V = Polynomial::fromTerms(assembly.vVars, std::move(terms));
  return cert;
}

double constraintResidual(const WsosConstraintRecord& record,
                          const SdpSolution& solution,
                          std::span<const double> freeValues) {
  Polynomial::TermMap acc;
  auto add = [&](const Monomial& m, double c) {
    if (c == 0.0) return;
    acc[m] += c;
  };
  for (const auto& g : record.grams) {
    const auto& Q = solution.X[static_cast<std::size_t>(g.blockIndex)];
    const auto n = g.basis.size();
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a; b < n; ++b) {
        double q = Q(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        double w = (a == b) ? q : q + Q(static_cast<Eigen::Index>(b),
                                        static_cast<Eigen::Index>(a));
        if (w == 0.0) continue;
        Monomial prod = g.basis[a].times(g.basis[b]);
        for (const auto& [wm, wc] : g.weight.terms())
          add(prod.times(wm), w * wc);
      }
  }
  for (const auto& d : record.multipliers)
    for (std::size_t k = 0; k < d.basis.size(); ++k) {
      double c = freeValues[static_cast<std::size_t>(d.firstScalar) + k];
      if (c == 0.0) continue;
      for (const auto& [wm, wc] : d.weight.terms())
        add(d.basis[k].times(wm), c * wc);
    }
  for (const auto& [m, coeff] : record.target) {
    double v = coeff.constant;
    for (const auto& [scalar, c] : coeff.terms)
      v += c * freeValues[static_cast<std::size_t>(scalar)];
    add(m, -v);
  }
  double maxAbs = 0.0;
  for (const auto& [m, c] : acc) maxAbs = std::max(maxAbs, std::abs(c));
  return maxAbs;
}

}  // namespace ebound
