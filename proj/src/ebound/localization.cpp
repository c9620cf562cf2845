#include "ebound/localization.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "ebound/parallel.hpp"

namespace ebound {

long LevelSetGrid::nodeCount() const {
  long count = 1;
  for (int r : res) count *= r;
  return count;
}

double LevelSetGrid::nodeCoord(std::size_t axis, long index) const {
  return res[axis] == 1
             ? lo[axis]
             : lo[axis] + (hi[axis] - lo[axis]) * index / (res[axis] - 1);
}

void LevelSetGrid::writeCsv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  for (std::size_t a = 0; a < axes.size(); ++a)
    out << axes[a] << ",";
  out << "member\n";
  out.precision(9);
  std::vector<long> idx(axes.size(), 0);
  for (long flat = 0; flat < nodeCount(); ++flat) {
    for (std::size_t a = 0; a < axes.size(); ++a)
      out << nodeCoord(a, idx[a]) << ",";
    out << int(mask[static_cast<std::size_t>(flat)]) << "\n";
    for (int a = static_cast<int>(axes.size()) - 1; a >= 0; --a) {
      if (++idx[static_cast<std::size_t>(a)] < res[static_cast<std::size_t>(a)]) break;
      idx[static_cast<std::size_t>(a)] = 0;
    }
  }
}

namespace {

template <typename T>
void writeRaw(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T readRaw(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

void LevelSetGrid::writeRle(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write("EBGR", 4);
  writeRaw<std::uint32_t>(out, 1);
  writeRaw<std::uint8_t>(out, static_cast<std::uint8_t>(kind));
  writeRaw<double>(out, lambda);
  writeRaw<double>(out, delta);
  writeRaw<double>(out, eps);
  writeRaw<std::uint32_t>(out, static_cast<std::uint32_t>(axes.size()));
  for (std::size_t a = 0; a < axes.size(); ++a) {
    writeRaw<std::uint16_t>(out, static_cast<std::uint16_t>(axes[a].size()));
    out.write(axes[a].data(), static_cast<long>(axes[a].size()));
    writeRaw<std::uint32_t>(out, static_cast<std::uint32_t>(res[a]));
    writeRaw<double>(out, lo[a]);
    writeRaw<double>(out, hi[a]);
  }
  writeRaw<std::uint64_t>(out, static_cast<std::uint64_t>(mask.size()));
  std::size_t i = 0;
  while (i < mask.size()) {
    std::uint8_t value = mask[i];
    std::uint64_t run = 1;
    while (i + run < mask.size() && mask[i + run] == value) ++run;
    writeRaw<std::uint8_t>(out, value);
    writeRaw<std::uint64_t>(out, run);
    i += run;
  }
}

LevelSetGrid LevelSetGrid::readRle(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (std::memcmp(magic, "EBGR", 4) != 0)
    throw Error("'" + path + "' is not a level-set grid file");
  auto version = readRaw<std::uint32_t>(in);
  if (version != 1) throw Error("unsupported grid file version");
  LevelSetGrid g;
  g.kind = static_cast<char>(readRaw<std::uint8_t>(in));
  g.lambda = readRaw<double>(in);
  g.delta = readRaw<double>(in);
  g.eps = readRaw<double>(in);
  auto naxes = readRaw<std::uint32_t>(in);
  for (std::uint32_t a = 0; a < naxes; ++a) {
    auto len = readRaw<std::uint16_t>(in);
    std::string name(len, '\0');
    in.read(name.data(), len);
    g.axes.push_back(name);
    g.res.push_back(static_cast<int>(readRaw<std::uint32_t>(in)));
    g.lo.push_back(readRaw<double>(in));
    g.hi.push_back(readRaw<double>(in));
  }
  auto total = readRaw<std::uint64_t>(in);
  g.mask.reserve(total);
  while (g.mask.size() < total) {
    auto value = readRaw<std::uint8_t>(in);
    auto run = readRaw<std::uint64_t>(in);
    if (!in) throw Error("truncated grid file");
    g.mask.insert(g.mask.end(), run, value);
  }
  return g;
}

LevelSetGrid LevelSetGrid::intersect(const LevelSetGrid& other) const {
  if (res != other.res || lo != other.lo || hi != other.hi)
    throw Error("grid intersection requires identical boxes");
  LevelSetGrid out = *this;
  for (std::size_t i = 0; i < mask.size(); ++i)
    out.mask[i] = mask[i] & other.mask[i];
  return out;
}

bool LevelSetGrid::subsetOf(const LevelSetGrid& other) const {
  if (mask.size() != other.mask.size())
    throw Error("grid comparison requires identical boxes");
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i] && !other.mask[i]) return false;
  return true;
}

namespace {

struct NodeFn {
  // evaluate a polynomial over either (t,x) axes or x axes
  Polynomial poly;
};

LevelSetGrid fillGrid(char kind, const Polynomial& fnPoly, bool timeAxis,
                      const ProblemSpec& spec, const GridSpec& grid,
                      const std::function<bool(double)>& member) {
  LevelSetGrid out;
  out.kind = kind;
  out.axes = timeAxis ? spec.timeStateVars() : spec.stateOnlyVars();
  grid.validate(out.axes.size());
  out.lo = grid.lo;
  out.hi = grid.hi;
  out.res = grid.res;
  long total = out.nodeCount();
  out.mask.assign(static_cast<std::size_t>(total), 0);

  // Strides for row-major order, last axis fastest.
  const std::size_t naxes = out.axes.size();
  std::vector<long> stride(naxes, 1);
  for (int a = static_cast<int>(naxes) - 2; a >= 0; --a)
    stride[static_cast<std::size_t>(a)] =
        stride[static_cast<std::size_t>(a) + 1] * grid.res[static_cast<std::size_t>(a) + 1];

  const long outer = grid.res[0];
  parallelFor(static_cast<std::size_t>(outer), [&](std::size_t begin, std::size_t end) {
    std::vector<double> point(naxes);
    std::vector<long> idx(naxes, 0);
    for (std::size_t o = begin; o < end; ++o) {
      point[0] = out.nodeCoord(0, static_cast<long>(o));
      std::fill(idx.begin(), idx.end(), 0);
      idx[0] = static_cast<long>(o);
      long base = static_cast<long>(o) * stride[0];
      long inner = total / outer;
      for (long k = 0; k < inner; ++k) {
        long rem = k;
        for (std::size_t a = naxes - 1; a >= 1; --a) {
          idx[a] = rem % grid.res[a];
          rem /= grid.res[a];
          point[a] = out.nodeCoord(a, idx[a]);
          if (a == 1) break;
        }
        double v = fnPoly.evaluate(point);
        out.mask[static_cast<std::size_t>(base + k)] = member(v) ? 1 : 0;
      }
    }
  });
  return out;
}

// Returns V over the grid's axis list, deciding whether a time axis is
// needed, and checks consistency with the provided grid dimension.
std::pair<Polynomial, bool> axisPolynomial(const Polynomial& V,
                                           const ProblemSpec& spec,
                                           const GridSpec& grid) {
  const auto tx = spec.timeStateVars();
  Polynomial v = V.embedded(tx);
  bool needsTime = v.dependsOn(0);
  if (!needsTime && grid.lo.size() == static_cast<std::size_t>(spec.stateDim())) {
    // project onto state variables
    Polynomial::TermMap terms;
    for (const auto& [m, c] : v.terms()) {
      std::vector<std::pair<int, int>> fac;
      for (const auto& [var, exp] : m.factors())
        fac.emplace_back(var - 1, exp);
      terms[Monomial(std::move(fac))] = c;
    }
    return {Polynomial::fromTerms(spec.stateOnlyVars(), std::move(terms)),
            false};
  }
  return {v, true};
}

}  // namespace

LevelSetGrid computeSDelta(const Polynomial& V, double lambda, double delta,
                           const ProblemSpec& spec, const GridSpec& grid) {
  if (delta < 0.0) throw Error("computeSDelta requires delta >= 0");
  auto [v, timeAxis] = axisPolynomial(V, spec, grid);
  auto out = fillGrid('S', v, timeAxis, spec, grid, [&](double value) {
    double gap = lambda - value;
    return gap >= -1e-12 * (1.0 + std::abs(lambda)) &&
           gap <= delta + 1e-12 * (1.0 + std::abs(lambda));
  });
  out.lambda = lambda;
  out.delta = delta;
  return out;
}

LevelSetGrid computeREps(const Polynomial& V, double eps,
                         const ProblemSpec& spec, const GridSpec& grid) {
  if (eps < 0.0) throw Error("computeREps requires eps >= 0");
  Polynomial lv = lieDerivative(V.embedded(spec.timeStateVars()), spec);
  auto [lvAxes, timeAxis] = axisPolynomial(lv, spec, grid);
  auto out = fillGrid('R', lvAxes, timeAxis, spec, grid, [&](double value) {
    return value >= -eps - 1e-12 && value <= 1e-12;
  });
  out.eps = eps;
  return out;
}

ContainmentAudit auditContainment(const Polynomial& V, double lambda,
                                  double delta, double eps,
                                  const Trajectory& traj,
                                  const ProblemSpec& spec) {
  ContainmentAudit audit;
  audit.budget = eps > 0.0 ? delta / eps
                           : std::numeric_limits<double>::infinity();

  const auto tx = spec.timeStateVars();
  Polynomial v = V.embedded(tx);
  Polynomial lv = lieDerivative(v, spec);

  auto evalAt = [&](const Polynomial& p, double t) {
    auto x = traj.at(t);
    std::vector<double> point(x.size() + 1);
    point[0] = t;
    std::copy(x.begin(), x.end(), point.begin() + 1);
    return p.evaluate(point);
  };
  auto phiAt = [&](double t) {
    auto x = traj.at(t);
    return spec.observe(t, x);
  };

  // Dense samples at 10x the integrator's natural resolution.
  const auto& ts = traj.times();
  std::vector<double> samples;
  samples.push_back(ts.front());
  double maxSpacing = 0.0;
  for (std::size_t s = 0; s + 1 < ts.size(); ++s) {
    double h = ts[s + 1] - ts[s];
    maxSpacing = std::max(maxSpacing, h / 10.0);
    for (int k = 1; k <= 10; ++k) samples.push_back(ts[s] + h * k / 10.0);
  }
  audit.samplingSlack = maxSpacing;

  // Latest time the observable attains lambda - delta.
  const double threshold = lambda - delta;
  double tStar = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (phiAt(samples[i]) >= threshold) {
      found = true;
      tStar = samples[i];
    }
  }
  if (!found) {
    audit.applicable = false;
    return audit;
  }
  // Refine the last crossing to the right of tStar.
  for (std::size_t i = samples.size(); i-- > 1;) {
    if (samples[i - 1] <= tStar && samples[i] > tStar) {
      double a = samples[i - 1], b = samples[i];
      if (phiAt(b) < threshold) {
        for (int k = 0; k < 60; ++k) {
          double m = 0.5 * (a + b);
          (phiAt(m) >= threshold ? a : b) = m;
        }
        tStar = a;
      }
      break;
    }
  }
  audit.applicable = true;
  audit.tStar = tStar;

  // Band containment 0 <= lambda - V <= delta on [t0, tStar].
  double worst = 0.0;
  for (double t : samples) {
    if (t > tStar) break;
    double gap = lambda - evalAt(v, t);
    double breach = std::max(-gap, gap - delta);
    worst = std::max(worst, breach);
  }
  audit.maxBandViolation = worst;
  audit.inSDeltaUntilTStar = worst <= 1e-9 * (1.0 + std::abs(lambda));

  // Lebesgue time with LV < -eps on [t0, tStar], with bisection refinement
  // of the crossings.
  auto below = [&](double t) { return evalAt(lv, t) < -eps; };
  double outside = 0.0;
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    double a = samples[i], b = samples[i + 1];
    if (a >= tStar) break;
    b = std::min(b, tStar);
    if (b <= a) continue;
    bool ba = below(a), bb = below(b);
    if (ba && bb) {
      outside += b - a;
    } else if (ba != bb) {
      double lo = a, hi = b;
      for (int k = 0; k < 50; ++k) {
        double m = 0.5 * (lo + hi);
        (below(m) == ba ? lo : hi) = m;
      }
      double cross = 0.5 * (lo + hi);
      outside += ba ? (cross - a) : (b - cross);
    }
  }
  audit.timeOutsideREps = outside;
  return audit;
}

}  // namespace ebound
