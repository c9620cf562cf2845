#include "ebound/problem_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ebound {

namespace {

using nlohmann::json;

std::vector<Polynomial> parseList(const json& arr,
                                  const std::vector<std::string>& vars,
                                  const std::string& what) {
  std::vector<Polynomial> out;
  if (arr.is_null()) return out;
  if (!arr.is_array()) throw Error(what + " must be an array of strings");
  for (const auto& item : arr) {
    if (!item.is_string()) throw Error(what + " must contain strings");
    out.push_back(Polynomial::parse(item.get<std::string>(), vars));
  }
  return out;
}

// Attaches a lower-bound parameterization for recognizable initial sets.
void attachSampler(ProblemSpec& spec) {
  const int n = spec.stateDim();
  const auto& eqs = spec.initialSet.equalities;
  const auto& ineqs = spec.initialSet.inequalities;

  // Point: one linear equality per state variable.
  if (static_cast<int>(eqs.size()) == n && ineqs.empty()) {
    std::vector<double> point(static_cast<std::size_t>(n));
    std::vector<bool> fixed(static_cast<std::size_t>(n), false);
    bool ok = true;
    for (const auto& eq : eqs) {
      if (eq.degree() > 1) {
        ok = false;
        break;
      }
      int var = -1;
      double coeff = 0.0, constant = 0.0;
      for (const auto& [m, c] : eq.terms()) {
        if (m.isOne()) {
          constant = c;
        } else if (m.degree() == 1) {
          var = m.factors()[0].first;
          coeff = c;
        }
      }
      if (var < 0 || coeff == 0.0 || fixed[static_cast<std::size_t>(var)]) {
        ok = false;
        break;
      }
      fixed[static_cast<std::size_t>(var)] = true;
      point[static_cast<std::size_t>(var)] = -constant / coeff;
    }
    if (ok && std::all_of(fixed.begin(), fixed.end(), [](bool b) { return b; })) {
      spec.initialSampler = InitialSampler{
          0, [point](std::span<const double>) { return point; }};
      return;
    }
  }

  // Quadratic level set: one equality q(x) = k with positive-definite-ish
  // diagonal-free quadratic part and identity-like structure. Two shapes:
  // sum (x_i - c_i)^2 = r^2 and general homogeneous q(x) = k.
  if (eqs.size() == 1 && ineqs.empty()) {
    const Polynomial& eq = eqs[0];
    if (eq.degree() == 2) {
      std::vector<double> quadDiag(static_cast<std::size_t>(n), 0.0);
      std::vector<double> lin(static_cast<std::size_t>(n), 0.0);
      double constant = 0.0;
      bool plain = true;  // no cross terms
      for (const auto& [m, c] : eq.terms()) {
        if (m.isOne())
          constant = c;
        else if (m.degree() == 1)
          lin[static_cast<std::size_t>(m.factors()[0].first)] = c;
        else if (m.factors().size() == 1 && m.factors()[0].second == 2)
          quadDiag[static_cast<std::size_t>(m.factors()[0].first)] = c;
        else
          plain = false;
      }
      bool identityQuad =
          plain && std::all_of(quadDiag.begin(), quadDiag.end(),
                               [&](double q) { return q == quadDiag[0] && q > 0.0; });
      if (identityQuad) {
        double a = quadDiag[0];
        std::vector<double> center(static_cast<std::size_t>(n));
        double r2 = -constant / a;
        for (int i = 0; i < n; ++i) {
          center[static_cast<std::size_t>(i)] = -lin[static_cast<std::size_t>(i)] / (2.0 * a);
          r2 += center[static_cast<std::size_t>(i)] * center[static_cast<std::size_t>(i)];
        }
        if (r2 > 0.0) {
          double r = std::sqrt(r2);
          if (n == 2) {
            spec.initialSampler = InitialSampler{
                1, [center, r](std::span<const double> p) {
                  double theta = 2.0 * M_PI * p[0];
                  return std::vector<double>{center[0] + r * std::cos(theta),
                                             center[1] + r * std::sin(theta)};
                }};
          } else {
            int dim = n;
            spec.initialSampler = InitialSampler{
                dim, [center, r, dim](std::span<const double> p) {
                  std::vector<double> u(static_cast<std::size_t>(dim));
                  double norm2 = 0.0;
                  for (int i = 0; i < dim; ++i) {
                    u[static_cast<std::size_t>(i)] = 2.0 * p[static_cast<std::size_t>(i)] - 1.0;
                    norm2 += u[static_cast<std::size_t>(i)] * u[static_cast<std::size_t>(i)];
                  }
                  if (norm2 == 0.0) {
                    u[0] = 1.0;
                    norm2 = 1.0;
                  }
                  double s = r / std::sqrt(norm2);
                  for (int i = 0; i < dim; ++i)
                    u[static_cast<std::size_t>(i)] =
                        center[static_cast<std::size_t>(i)] + s * u[static_cast<std::size_t>(i)];
                  return u;
                }};
          }
          return;
        }
      }
      // Homogeneous quadratic level set q(x) = k with k > 0: rescale random
      // directions onto it (covers weighted-norm shells).
      bool homogeneous = std::all_of(eq.terms().begin(), eq.terms().end(),
                                     [](const auto& term) {
                                       return term.first.isOne() ||
                                              term.first.degree() == 2;
                                     });
      if (homogeneous && constant < 0.0) {
        Polynomial q = eq - Polynomial::constant(eq.variables(), constant);
        double k = -constant;
        int dim = n;
        spec.initialSampler = InitialSampler{
            dim, [q, k, dim](std::span<const double> p) {
              std::vector<double> u(static_cast<std::size_t>(dim));
              for (int i = 0; i < dim; ++i)
                u[static_cast<std::size_t>(i)] = 2.0 * p[static_cast<std::size_t>(i)] - 1.0;
              double val = q.evaluate(u);
              if (val <= 0.0) {
                std::fill(u.begin(), u.end(), 0.0);
                u[0] = 1.0;
                val = q.evaluate(u);
                if (val <= 0.0) return u;
              }
              double s = std::sqrt(k / val);
              for (auto& ui : u) ui *= s;
              return u;
            }};
        return;
      }
    }
  }

  // Interval for one state variable: two linear inequalities.
  if (n == 1 && eqs.empty() && ineqs.size() == 2) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool ok = true;
    for (const auto& p : ineqs) {
      if (p.degree() != 1) {
        ok = false;
        break;
      }
      double a = 0.0, b = 0.0;  // a*x + b >= 0
      for (const auto& [m, c] : p.terms()) {
        if (m.isOne())
          b = c;
        else
          a = c;
      }
      if (a > 0.0)
        lo = std::max(lo, -b / a);
      else if (a < 0.0)
        hi = std::min(hi, -b / a);
      else
        ok = false;
    }
    if (ok && std::isfinite(lo) && std::isfinite(hi) && hi >= lo) {
      spec.initialSampler = InitialSampler{
          1, [lo, hi](std::span<const double> p) {
            double s = std::clamp(p[0], 0.0, 1.0);
            return std::vector<double>{lo + s * (hi - lo)};
          }};
    }
  }
}

}  // namespace

ProblemSpec parseProblemJson(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& ex) {
    throw Error(std::string("problem file is not valid JSON: ") + ex.what());
  }
  ProblemSpec spec;
  spec.name = doc.value("name", std::string("file"));
  if (!doc.contains("variables") || !doc["variables"].is_array())
    throw Error("problem file: 'variables' array is required");
  for (const auto& v : doc["variables"]) {
    std::string name = v.get<std::string>();
    if (name == "t") throw Error("problem file: 't' is reserved for time");
    spec.stateVars.push_back(name);
  }
  const auto tx = spec.timeStateVars();

  if (!doc.contains("dynamics"))
    throw Error("problem file: 'dynamics' is required");
  spec.dynamics = parseList(doc["dynamics"], tx, "dynamics");
  if (spec.dynamics.size() != spec.stateVars.size())
    throw Error("problem file: dynamics count differs from variables count");

  if (!doc.contains("observable"))
    throw Error("problem file: 'observable' is required");
  spec.observable =
      Polynomial::parse(doc["observable"].get<std::string>(), tx);
  if (doc.contains("integrand") && !doc["integrand"].is_null())
    spec.integrand = Polynomial::parse(doc["integrand"].get<std::string>(), tx);

  double t0 = doc.value("t0", 0.0);
  if (!doc.contains("horizon"))
    throw Error("problem file: 'horizon' is required");
  const auto& hor = doc["horizon"];
  std::string type = hor.value("type", std::string());
  if (type == "infinite") {
    spec.horizon = Horizon::infinite(t0);
  } else if (type == "finite") {
    if (!hor.contains("T")) throw Error("finite horizon requires 'T'");
    spec.horizon = Horizon::upTo(hor["T"].get<double>(), t0);
  } else {
    throw Error("horizon type must be 'finite' or 'infinite'");
  }

  if (doc.contains("initial_set")) {
    spec.initialSet.inequalities = parseList(
        doc["initial_set"].value("inequalities", json::array()), spec.stateVars,
        "initial_set.inequalities");
    spec.initialSet.equalities = parseList(
        doc["initial_set"].value("equalities", json::array()), spec.stateVars,
        "initial_set.equalities");
  }
  if (doc.contains("omega_extra")) {
    spec.omegaExtra.inequalities =
        parseList(doc["omega_extra"].value("inequalities", json::array()), tx,
                  "omega_extra.inequalities");
    spec.omegaExtra.equalities =
        parseList(doc["omega_extra"].value("equalities", json::array()), tx,
                  "omega_extra.equalities");
  }
  if (doc.contains("symmetry") && !doc["symmetry"].is_null()) {
    std::vector<int> signs;
    for (const auto& s : doc["symmetry"]) signs.push_back(s.get<int>());
    spec.symmetrySigns = signs;
  }
  spec.validate();
  attachSampler(spec);
  return spec;
}

ProblemSpec loadProblemFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open problem file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parseProblemJson(buffer.str());
}

std::string serializeProblemJson(const ProblemSpec& spec, int indent) {
  if (!spec.observable)
    throw Error("problems with non-polynomial observables cannot be serialized");
  json doc;
  if (!spec.name.empty()) doc["name"] = spec.name;
  doc["variables"] = spec.stateVars;
  json dyn = json::array();
  for (const auto& f : spec.dynamics) dyn.push_back(f.str());
  doc["dynamics"] = dyn;
  doc["observable"] = spec.observable->str();
  if (spec.integrand) doc["integrand"] = spec.integrand->str();
  doc["t0"] = spec.horizon.t0;
  if (spec.horizon.finite)
    doc["horizon"] = {{"type", "finite"}, {"T", spec.horizon.T}};
  else
    doc["horizon"] = {{"type", "infinite"}};
  auto setJson = [](const SemialgebraicSet& set) {
    json obj;
    json ineq = json::array(), eq = json::array();
    for (const auto& p : set.inequalities) ineq.push_back(p.str());
    for (const auto& p : set.equalities) eq.push_back(p.str());
    obj["inequalities"] = ineq;
    obj["equalities"] = eq;
    return obj;
  };
  doc["initial_set"] = setJson(spec.initialSet);
  doc["omega_extra"] = setJson(spec.omegaExtra);
  if (spec.symmetrySigns) doc["symmetry"] = *spec.symmetrySigns;
  return doc.dump(indent);
}

void saveProblemFile(const ProblemSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << serializeProblemJson(spec) << "\n";
}

}  // namespace ebound
