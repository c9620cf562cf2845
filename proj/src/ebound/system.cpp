#include "ebound/system.hpp"

#include <algorithm>
#include <cmath>

namespace ebound {

bool SemialgebraicSet::contains(std::span<const double> point,
                                double tol) const {
  for (const auto& p : inequalities)
    if (p.evaluate(point) < -tol) return false;
  for (const auto& p : equalities)
    if (std::abs(p.evaluate(point)) > tol) return false;
  return true;
}

Horizon Horizon::upTo(double T, double t0) {
  if (!(T > t0)) throw Error("horizon requires T > t0");
  return {true, t0, T};
}

std::vector<std::string> ProblemSpec::timeStateVars() const {
  std::vector<std::string> v;
  v.reserve(stateVars.size() + 1);
  v.push_back("t");
  v.insert(v.end(), stateVars.begin(), stateVars.end());
  return v;
}

int ProblemSpec::maxDynamicsDegree() const {
  int d = 0;
  for (const auto& f : dynamics) d = std::max(d, f.degree());
  return d;
}

bool ProblemSpec::autonomous() const {
  for (const auto& f : dynamics) {
    int tIdx = f.indexOf("t");
    if (tIdx >= 0 && f.dependsOn(tIdx)) return false;
  }
  return true;
}

double ProblemSpec::observe(double t, std::span<const double> x) const {
  if (observableFn) return observableFn(t, x);
  if (!observable) throw Error("problem has no observable");
  std::vector<double> point(x.size() + 1);
  point[0] = t;
  std::copy(x.begin(), x.end(), point.begin() + 1);
  return observable->embedded(timeStateVars()).evaluate(point);
}

namespace {

Polynomial applySigns(const Polynomial& p,
                      const std::vector<std::string>& stateVars,
                      const std::vector<int>& signs) {
  Polynomial out = p;
  for (std::size_t i = 0; i < stateVars.size(); ++i) {
    if (signs[i] == 1) continue;
    int idx = out.indexOf(stateVars[i]);
    if (idx >= 0) out = out.substituteScaled(idx, -1.0);
  }
  return out;
}

}  // namespace

void ProblemSpec::validate() const {
  const auto tx = timeStateVars();
  if (dynamics.size() != stateVars.size())
    throw Error("problem '" + name + "': dynamics count differs from state dimension");
  for (const auto& f : dynamics) f.embedded(tx);
  if (observable) observable->embedded(tx);
  if (integrand) integrand->embedded(tx);
  if (!observable && !observableFn)
    throw Error("problem '" + name + "': no observable given");
  for (const auto& p : initialSet.inequalities) p.embedded(stateVars);
  for (const auto& p : initialSet.equalities) p.embedded(stateVars);
  for (const auto& p : omegaExtra.inequalities) p.embedded(tx);
  for (const auto& p : omegaExtra.equalities) p.embedded(tx);
  if (horizon.finite && !(horizon.T > horizon.t0))
    throw Error("problem '" + name + "': finite horizon requires T > t0");

  if (symmetrySigns) {
    const auto& signs = *symmetrySigns;
    if (signs.size() != stateVars.size())
      throw Error("symmetry sign vector length differs from state dimension");
    for (int s : signs)
      if (s != 1 && s != -1) throw Error("symmetry signs must be +-1");
    for (std::size_t i = 0; i < dynamics.size(); ++i) {
      Polynomial lhs = applySigns(dynamics[i].embedded(tx), stateVars, signs);
      Polynomial rhs = dynamics[i].embedded(tx).scaled(signs[i]);
      if (!(lhs == rhs))
        throw Error("declared symmetry does not leave the dynamics equivariant (component " +
                    std::to_string(i + 1) + ")");
    }
    if (observable) {
      Polynomial p = observable->embedded(tx);
      if (!(applySigns(p, stateVars, signs) == p))
        throw Error("declared symmetry does not leave the observable invariant");
    }
    if (integrand) {
      Polynomial p = integrand->embedded(tx);
      if (!(applySigns(p, stateVars, signs) == p))
        throw Error("declared symmetry does not leave the integrand invariant");
    }
    auto checkSet = [&](const SemialgebraicSet& set, const char* which) {
      auto checkOne = [&](const Polynomial& p) {
        if (!(applySigns(p, stateVars, signs) == p))
          throw Error(std::string("declared symmetry does not leave a ") +
                      which + " polynomial invariant");
      };
      for (const auto& p : set.inequalities) checkOne(p);
      for (const auto& p : set.equalities) checkOne(p);
    };
    checkSet(initialSet, "initial-set");
    checkSet(omegaExtra, "domain");
  }
}

Polynomial lieDerivative(const Polynomial& V, const ProblemSpec& spec) {
  const auto tx = spec.timeStateVars();
  Polynomial v = V.embedded(tx);
  Polynomial out = v.differentiate(0);  // d/dt
  for (std::size_t i = 0; i < spec.dynamics.size(); ++i)
    out = out + spec.dynamics[i].embedded(tx) * v.differentiate(static_cast<int>(i) + 1);
  return out;
}

SemialgebraicSet buildOmega(const ProblemSpec& spec) {
  const auto tx = spec.timeStateVars();
  SemialgebraicSet omega;
  for (const auto& p : spec.omegaExtra.inequalities)
    omega.inequalities.push_back(p.embedded(tx));
  for (const auto& p : spec.omegaExtra.equalities)
    omega.equalities.push_back(p.embedded(tx));
  Polynomial t = Polynomial::variable(tx, 0);
  Polynomial shifted = t - Polynomial::constant(tx, spec.horizon.t0);
  if (spec.horizon.finite) {
    Polynomial tail = Polynomial::constant(tx, spec.horizon.T) - t;
    omega.inequalities.push_back(shifted * tail);
  } else {
    omega.inequalities.push_back(shifted);
  }
  return omega;
}

ProblemSpec burgersTruncation(int N, double phi0, bool localDomain) {
  if (N < 1) throw Error("burgersTruncation requires N >= 1");
  ProblemSpec spec;
  spec.name = "burgers";
  for (int n = 1; n <= N; ++n) spec.stateVars.push_back("a" + std::to_string(n));
  const auto tx = spec.timeStateVars();
  const double s = std::sqrt(2.0) * M_PI;

  auto mode = [&](int n) { return Polynomial::variable(tx, n); };  // a_n at index n

  Polynomial phi(spec.stateVars);
  for (int n = 1; n <= N; ++n) {
    const double w = (2.0 * M_PI * n) * (2.0 * M_PI * n);  // (2 pi n)^2
    Polynomial an = Polynomial::variable(spec.stateVars, n - 1);
    phi = phi + (0.5 * w) * (an * an);  // 2 pi^2 n^2 = w/2

    Polynomial rhs = (-w) * mode(n);
    Polynomial quad(tx);
    for (int m = 1; m <= N - n; ++m) quad = quad + mode(m) * mode(m + n);
    for (int m = 1; m <= n - 1; ++m)
      quad = quad - 0.5 * (mode(m) * mode(n - m));
    spec.dynamics.push_back(rhs + (s * n) * quad);
  }
  spec.observable = phi;
  spec.horizon = Horizon::infinite(0.0);
  spec.initialSet.equalities.push_back(
      phi - Polynomial::constant(spec.stateVars, phi0));

  std::vector<int> signs;
  for (int n = 1; n <= N; ++n) signs.push_back(n % 2 == 1 ? -1 : 1);
  spec.symmetrySigns = signs;

  if (localDomain) {
    // Trajectories keep ||a||^2 below its X0 ceiling phi0 / (2 pi^2).
    Polynomial norm2(tx);
    for (int n = 1; n <= N; ++n) norm2 = norm2 + mode(n) * mode(n);
    spec.omegaExtra.inequalities.push_back(
        Polynomial::constant(tx, phi0 / (2.0 * M_PI * M_PI)) - norm2);
  }

  Polynomial phiCopy = phi;
  int dim = N;
  spec.initialSampler = InitialSampler{
      dim, [phiCopy, dim, phi0](std::span<const double> params) {
        std::vector<double> u(static_cast<std::size_t>(dim));
        for (int i = 0; i < dim; ++i) u[static_cast<std::size_t>(i)] = 2.0 * params[static_cast<std::size_t>(i)] - 1.0;
        double val = phiCopy.evaluate(u);
        if (val <= 0.0) {
          std::fill(u.begin(), u.end(), 0.0);
          u[0] = 1.0;
          val = phiCopy.evaluate(u);
        }
        double scale = std::sqrt(phi0 / val);
        for (auto& ui : u) ui *= scale;
        return u;
      }};
  spec.validate();
  return spec;
}

namespace {

double numberParam(const std::map<std::string, std::string>& params,
                   const std::string& key, double fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw Error("builtin parameter '" + key + "': invalid number '" +
                it->second + "'");
  }
}

std::string stringParam(const std::map<std::string, std::string>& params,
                        const std::string& key, const std::string& fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

Horizon horizonParam(const std::map<std::string, std::string>& params) {
  std::string h = stringParam(params, "horizon", "inf");
  if (h == "inf" || h == "infinite") return Horizon::infinite(0.0);
  try {
    return Horizon::upTo(std::stod(h), 0.0);
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    throw Error("builtin parameter 'horizon': expected 'inf' or a number, got '" + h + "'");
  }
}

ProblemSpec makeNonautonomous2d(const std::map<std::string, std::string>& params) {
  ProblemSpec spec;
  spec.name = "nonautonomous2d";
  spec.stateVars = {"x1", "x2"};
  const auto tx = spec.timeStateVars();
  spec.dynamics = {Polynomial::parse("x2*t - 0.1*x1 - x1*x2", tx),
                   Polynomial::parse("-x1*t - x2 + x1^2", tx)};
  spec.observable = Polynomial::parse("x1", tx);
  spec.horizon = horizonParam(params);

  std::string x0 = stringParam(params, "x0", "point");
  if (x0 == "point") {
    spec.initialSet.equalities = {Polynomial::parse("x1", spec.stateVars),
                                  Polynomial::parse("x2 - 1", spec.stateVars)};
    spec.initialSampler = InitialSampler{
        0, [](std::span<const double>) { return std::vector<double>{0.0, 1.0}; }};
  } else if (x0 == "circle") {
    spec.initialSet.equalities = {
        Polynomial::parse("(x1 + 0.75)^2 + x2^2 - 1", spec.stateVars)};
    spec.initialSampler = InitialSampler{
        1, [](std::span<const double> p) {
          double theta = 2.0 * M_PI * p[0];
          return std::vector<double>{std::cos(theta) - 0.75, std::sin(theta)};
        }};
  } else {
    throw Error("nonautonomous2d: parameter x0 must be 'point' or 'circle'");
  }
  spec.validate();
  return spec;
}

ProblemSpec makeQuadratic1d(const std::map<std::string, std::string>& params) {
  ProblemSpec spec;
  spec.name = "quadratic1d";
  spec.stateVars = {"x"};
  const auto tx = spec.timeStateVars();
  spec.dynamics = {Polynomial::parse("x^2", tx)};
  // Phi = 4x / (1 + 4x^2) is not polynomial; expose it through the scalar
  // hook so trajectory and certificate work still applies.
  spec.observableFn = [](double, std::span<const double> x) {
    return 4.0 * x[0] / (1.0 + 4.0 * x[0] * x[0]);
  };
  spec.horizon = horizonParam(params);
  double x0 = numberParam(params, "x0", -1.0);
  spec.initialSet.equalities = {
      Polynomial::variable(spec.stateVars, 0) -
      Polynomial::constant(spec.stateVars, x0)};
  spec.initialSampler = InitialSampler{
      0, [x0](std::span<const double>) { return std::vector<double>{x0}; }};
  spec.validate();
  return spec;
}

ProblemSpec makeCubicSemistable1d(const std::map<std::string, std::string>& params) {
  ProblemSpec spec;
  spec.name = "cubicSemistable1d";
  spec.stateVars = {"x"};
  const auto tx = spec.timeStateVars();
  spec.dynamics = {Polynomial::parse("x^2 - x^3", tx)};
  spec.observable = Polynomial::parse("4*x - 4*x^2", tx);
  spec.horizon = horizonParam(params);
  // X0 = [-1, 0]
  spec.initialSet.inequalities = {Polynomial::parse("x + 1", spec.stateVars),
                                  Polynomial::parse("-x", spec.stateVars)};
  // Trajectories of interest stay in X = [-1, 1].
  spec.omegaExtra.inequalities = {Polynomial::parse("1 - x^2", tx)};
  spec.initialSampler = InitialSampler{
      1, [](std::span<const double> p) { return std::vector<double>{p[0] - 1.0}; }};
  spec.validate();
  return spec;
}

ProblemSpec makeUnstableFocus2d(const std::map<std::string, std::string>& params) {
  ProblemSpec spec;
  spec.name = "unstableFocus2d";
  spec.stateVars = {"x1", "x2"};
  const auto tx = spec.timeStateVars();
  spec.dynamics = {
      Polynomial::parse("0.2*x1 + x2 - x2*(x1^2 + x2^2)", tx),
      Polynomial::parse("-0.4*x2 + x1*(x1^2 + x2^2)", tx)};
  spec.observable = Polynomial::parse("x1^2 + x2^2", tx);
  spec.horizon = horizonParam(params);
  spec.initialSet.equalities = {
      Polynomial::parse("x1^2 + x2^2 - 0.25", spec.stateVars)};
  spec.symmetrySigns = std::vector<int>{-1, -1};
  spec.initialSampler = InitialSampler{
      1, [](std::span<const double> p) {
        double theta = 2.0 * M_PI * p[0];
        return std::vector<double>{0.5 * std::cos(theta), 0.5 * std::sin(theta)};
      }};
  spec.validate();
  return spec;
}

ProblemSpec makeVanDerPol(const std::map<std::string, std::string>& params) {
  ProblemSpec spec;
  spec.name = "vanDerPol";
  spec.stateVars = {"x1", "x2"};
  const auto tx = spec.timeStateVars();
  spec.dynamics = {Polynomial::parse("x2", tx),
                   Polynomial::parse("(1 - 9*x1^2)*x2 - x1", tx)};
  spec.observable = Polynomial::parse("x1^2 + x2^2", tx);
  spec.horizon = horizonParam(params);
  spec.initialSet.equalities = {
      Polynomial::parse("x1^2 + x2^2 - 0.04", spec.stateVars)};
  spec.symmetrySigns = std::vector<int>{-1, -1};
  spec.initialSampler = InitialSampler{
      1, [](std::span<const double> p) {
        double theta = 2.0 * M_PI * p[0];
        return std::vector<double>{0.2 * std::cos(theta), 0.2 * std::sin(theta)};
      }};
  spec.validate();
  return spec;
}

}  // namespace

ProblemSpec builtinProblem(const std::string& name,
                           const std::map<std::string, std::string>& params) {
  if (name == "nonautonomous2d") return makeNonautonomous2d(params);
  if (name == "quadratic1d") return makeQuadratic1d(params);
  if (name == "cubicSemistable1d") return makeCubicSemistable1d(params);
  if (name == "unstableFocus2d") return makeUnstableFocus2d(params);
  if (name == "vanDerPol") return makeVanDerPol(params);
  if (name == "burgers") {
    int n = static_cast<int>(numberParam(params, "N", 16));
    double phi0 = numberParam(params, "phi0", 1.0);
    bool local = stringParam(params, "omega", "global") == "local";
    ProblemSpec spec = burgersTruncation(n, phi0, local);
    Horizon h = horizonParam(params);
    spec.horizon = h;
    return spec;
  }
  throw Error("unknown builtin problem '" + name + "'");
}

std::vector<std::string> builtinProblemNames() {
  return {"nonautonomous2d", "quadratic1d",    "cubicSemistable1d",
          "unstableFocus2d", "vanDerPol",      "burgers"};
}

ProblemSpec rescaleState(const ProblemSpec& spec, double factor) {
  if (factor <= 0.0) throw Error("state rescale factor must be positive");
  if (factor == 1.0) return spec;
  ProblemSpec out = spec;
  const auto tx = spec.timeStateVars();
  auto scalePoly = [&](const Polynomial& p,
                       const std::vector<std::string>& vars) {
    Polynomial q = p.embedded(vars);
    for (const auto& sv : spec.stateVars) {
      int idx = q.indexOf(sv);
      if (idx >= 0) q = q.substituteScaled(idx, factor);
    }
    return q;
  };
  for (std::size_t i = 0; i < out.dynamics.size(); ++i)
    out.dynamics[i] = scalePoly(spec.dynamics[i], tx).scaled(1.0 / factor);
  if (spec.observable) out.observable = scalePoly(*spec.observable, tx);
  if (spec.integrand) out.integrand = scalePoly(*spec.integrand, tx);
  for (auto& p : out.initialSet.inequalities) p = scalePoly(p, spec.stateVars);
  for (auto& p : out.initialSet.equalities) p = scalePoly(p, spec.stateVars);
  for (auto& p : out.omegaExtra.inequalities) p = scalePoly(p, tx);
  for (auto& p : out.omegaExtra.equalities) p = scalePoly(p, tx);
  if (spec.initialSampler) {
    auto inner = spec.initialSampler->map;
    out.initialSampler = InitialSampler{
        spec.initialSampler->paramCount,
        [inner, factor](std::span<const double> p) {
          auto x = inner(p);
          for (auto& xi : x) xi /= factor;
          return x;
        }};
  }
  if (spec.observableFn) {
    auto fn = spec.observableFn;
    out.observableFn = [fn, factor](double t, std::span<const double> x) {
      std::vector<double> scaled(x.begin(), x.end());
      for (auto& xi : scaled) xi *= factor;
      return fn(t, scaled);
    };
  }
  out.validate();
  return out;
}

ProblemSpec augmentWithIntegral(const ProblemSpec& spec) {
  if (!spec.integrand)
    throw Error("augmentWithIntegral requires an integrand");
  if (!spec.observable)
    throw Error("augmentWithIntegral requires a polynomial observable");
  ProblemSpec out;
  out.name = spec.name + "+integral";
  out.stateVars = spec.stateVars;
  out.stateVars.push_back("z");
  const auto tx = out.timeStateVars();
  for (const auto& f : spec.dynamics) out.dynamics.push_back(f.embedded(tx));
  out.dynamics.push_back(spec.integrand->embedded(tx));
  out.observable = spec.observable->embedded(tx) + Polynomial::variable(tx, out.stateDim());
  out.horizon = spec.horizon;
  out.initialSet = spec.initialSet;
  for (auto& p : out.initialSet.inequalities) p = p.embedded(out.stateVars);
  for (auto& p : out.initialSet.equalities) p = p.embedded(out.stateVars);
  out.initialSet.equalities.push_back(
      Polynomial::variable(out.stateVars, out.stateDim() - 1));  // z = 0
  out.omegaExtra = spec.omegaExtra;
  for (auto& p : out.omegaExtra.inequalities) p = p.embedded(tx);
  for (auto& p : out.omegaExtra.equalities) p = p.embedded(tx);
  if (spec.initialSampler) {
    auto inner = spec.initialSampler->map;
    out.initialSampler = InitialSampler{
        spec.initialSampler->paramCount,
        [inner](std::span<const double> p) {
          auto x = inner(p);
          x.push_back(0.0);
          return x;
        }};
  }
  // A sign symmetry extends to z only when Psi is invariant; then z is even.
  if (spec.symmetrySigns) {
    Polynomial psi = spec.integrand->embedded(tx);
    Polynomial flipped = psi;
    for (std::size_t i = 0; i < spec.stateVars.size(); ++i) {
      if ((*spec.symmetrySigns)[i] == 1) continue;
      int idx = flipped.indexOf(spec.stateVars[i]);
      if (idx >= 0) flipped = flipped.substituteScaled(idx, -1.0);
    }
    if (flipped == psi) {
      auto signs = *spec.symmetrySigns;
      signs.push_back(1);
      out.symmetrySigns = signs;
    }
  }
  out.validate();
  return out;
}

}  // namespace ebound
