#include "ebound/trajectories.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "ebound/parallel.hpp"

namespace ebound {

namespace {

// Flattened polynomial for fast repeated evaluation.
struct CompiledPoly {
  struct Term {
    double coeff;
    std::vector<std::pair<int, int>> factors;
  };
  std::vector<Term> terms;

  static CompiledPoly from(const Polynomial& p) {
    CompiledPoly out;
    for (const auto& [m, c] : p.terms())
      out.terms.push_back({c, m.factors()});
    return out;
  }

  double eval(std::span<const double> point) const {
    double sum = 0.0;
    for (const auto& term : terms) {
      double v = term.coeff;
      for (const auto& [var, exp] : term.factors) {
        double base = point[static_cast<std::size_t>(var)];
        for (int e = 0; e < exp; ++e) v *= base;
      }
      sum += v;
    }
    return sum;
  }
};

struct CompiledSystem {
  int dim;
  std::vector<CompiledPoly> rhs;  // over (t, x)

  explicit CompiledSystem(const ProblemSpec& spec) : dim(spec.stateDim()) {
    const auto tx = spec.timeStateVars();
    for (const auto& f : spec.dynamics)
      rhs.push_back(CompiledPoly::from(f.embedded(tx)));
  }

  void eval(double t, std::span<const double> x, std::span<double> dx,
            std::vector<double>& scratch) const {
    scratch.resize(static_cast<std::size_t>(dim) + 1);
    scratch[0] = t;
    std::copy(x.begin(), x.end(), scratch.begin() + 1);
    for (int i = 0; i < dim; ++i)
      dx[static_cast<std::size_t>(i)] = rhs[static_cast<std::size_t>(i)].eval(scratch);
  }
};

// Dormand-Prince 5(4) tableau.
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187,
                 A53 = 64448.0 / 6561, A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247,
                 A64 = 49.0 / 176, A65 = -5103.0 / 18656;
constexpr double A71 = 35.0 / 384, A73 = 500.0 / 1113, A74 = 125.0 / 192,
                 A75 = -2187.0 / 6784, A76 = 11.0 / 84;
constexpr double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920,
                 E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40;
constexpr double D1 = -12715105075.0 / 11282082432.0,
                 D3 = 87487479700.0 / 32700410799.0,
                 D4 = -10690763975.0 / 1880347072.0,
                 D5 = 701980252875.0 / 199316789632.0,
                 D6 = -1453857185.0 / 822651844.0,
                 D7 = 69997945.0 / 29380423.0;

}  // namespace

std::span<const double> Trajectory::stateAt(std::size_t index) const {
  return {states_.data() + index * static_cast<std::size_t>(dim_),
          static_cast<std::size_t>(dim_)};
}

std::size_t Trajectory::stepIndex(double t) const {
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  std::size_t i = it == times_.begin()
                      ? 0
                      : static_cast<std::size_t>(it - times_.begin()) - 1;
  return std::min(i, times_.size() - 2);
}

std::vector<double> Trajectory::at(double t) const {
  const std::size_t n = static_cast<std::size_t>(dim_);
  t = std::clamp(t, times_.front(), times_.back());
  std::size_t step = stepIndex(t);
  double h = times_[step + 1] - times_[step];
  double theta = (t - times_[step]) / h;
  double theta1 = 1.0 - theta;
  const double* r = dense_.data() + step * 5 * n;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r1 = r[i], r2 = r[n + i], r3 = r[2 * n + i],
                 r4 = r[3 * n + i], r5 = r[4 * n + i];
    out[i] = r1 + theta * (r2 + theta1 * (r3 + theta * (r4 + theta1 * r5)));
  }
  return out;
}

std::pair<double, double> Trajectory::maxOf(
    const std::function<double(double, std::span<const double>)>& fn,
    int samplesPerStep) const {
  double best = -std::numeric_limits<double>::infinity();
  double bestT = times_.front();
  auto consider = [&](double t) {
    auto x = at(t);
    double v = fn(t, x);
    if (v > best || (v == best && t < bestT)) {
      best = v;
      bestT = t;
    }
  };
  consider(times_.front());
  for (std::size_t s = 0; s + 1 < times_.size(); ++s) {
    double h = times_[s + 1] - times_[s];
    for (int k = 1; k <= samplesPerStep; ++k)
      consider(times_[s] + h * k / samplesPerStep);
  }
  // Golden-section polish inside the bracketing neighborhood.
  double span = 0.0;
  for (std::size_t s = 0; s + 1 < times_.size(); ++s)
    if (bestT >= times_[s] && bestT <= times_[s + 1])
      span = (times_[s + 1] - times_[s]) / samplesPerStep;
  double a = std::max(times_.front(), bestT - span);
  double b = std::min(times_.back(), bestT + span);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - gr * (b - a), d = a + gr * (b - a);
  auto val = [&](double t) {
    auto x = at(t);
    return fn(t, x);
  };
  double fc = val(c), fd = val(d);
  for (int it = 0; it < 80 && (b - a) > 1e-13 * (1.0 + std::abs(bestT)); ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = val(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = val(d);
    }
  }
  double mid = 0.5 * (a + b);
  consider(mid);
  return {best, bestT};
}

void Trajectory::writeCsv(const std::string& path,
                          const ProblemSpec& spec) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << "t";
  for (const auto& v : spec.stateVars) out << "," << v;
  out << ",phi\n";
  out.precision(9);
  for (std::size_t i = 0; i < times_.size(); ++i) {
    out << times_[i];
    auto x = stateAt(i);
    for (double xi : x) out << "," << xi;
    out << "," << spec.observe(times_[i], x) << "\n";
  }
}

Trajectory integrate(const ProblemSpec& spec, std::span<const double> x0,
                     double tEnd, const IntegrateOptions& opts) {
  const int n = spec.stateDim();
  if (static_cast<int>(x0.size()) != n)
    throw Error("integrate: initial state has wrong dimension");
  for (double v : x0)
    if (!std::isfinite(v)) throw Error("integrate: initial state not finite");
  const double t0 = spec.horizon.t0;
  if (!(tEnd > t0)) throw Error("integrate: tEnd must exceed t0");

  CompiledSystem sys(spec);
  std::vector<double> scratch;

  Trajectory traj;
  traj.dim_ = n;
  const std::size_t un = static_cast<std::size_t>(n);
  std::vector<double> y(x0.begin(), x0.end());
  std::vector<double> k1(un), k2(un), k3(un), k4(un), k5(un), k6(un), k7(un);
  std::vector<double> ytmp(un), y1(un);

  traj.times_.push_back(t0);
  traj.states_.insert(traj.states_.end(), y.begin(), y.end());

  double t = t0;
  sys.eval(t, y, k1, scratch);
  double h = opts.initialStep > 0.0 ? opts.initialStep
                                    : std::min(1e-2 * (tEnd - t0), 1e-2);
  h = std::min(h, opts.maxStep);
  double errOld = 1e-4;
  bool lastStep = false;

  for (long step = 0; step < opts.maxSteps && !lastStep; ++step) {
    if (t + h >= tEnd) {
      h = tEnd - t;
      lastStep = true;
    }
    if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)))
      throw Error("integrate: step size underflow at t = " +
                  formatDouble(t) + " (last state recorded up to there)");

    auto stage = [&](std::span<double> dst, std::initializer_list<std::pair<const std::vector<double>*, double>> terms) {
      for (std::size_t i = 0; i < un; ++i) {
        double acc = y[i];
        for (const auto& [k, a] : terms) acc += h * a * (*k)[i];
        dst[i] = acc;
      }
    };

    stage(ytmp, {{&k1, A21}});
    sys.eval(t + h / 5.0, ytmp, k2, scratch);
    stage(ytmp, {{&k1, A31}, {&k2, A32}});
    sys.eval(t + 3.0 * h / 10.0, ytmp, k3, scratch);
    stage(ytmp, {{&k1, A41}, {&k2, A42}, {&k3, A43}});
    sys.eval(t + 4.0 * h / 5.0, ytmp, k4, scratch);
    stage(ytmp, {{&k1, A51}, {&k2, A52}, {&k3, A53}, {&k4, A54}});
    sys.eval(t + 8.0 * h / 9.0, ytmp, k5, scratch);
    stage(ytmp, {{&k1, A61}, {&k2, A62}, {&k3, A63}, {&k4, A64}, {&k5, A65}});
    sys.eval(t + h, ytmp, k6, scratch);
    for (std::size_t i = 0; i < un; ++i)
      y1[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] +
                          A75 * k5[i] + A76 * k6[i]);
    sys.eval(t + h, y1, k7, scratch);

    double errNorm = 0.0;
    for (std::size_t i = 0; i < un; ++i) {
      double e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] +
                      E6 * k6[i] + E7 * k7[i]);
      double sc = opts.absTol +
                  opts.relTol * std::max(std::abs(y[i]), std::abs(y1[i]));
      errNorm += (e / sc) * (e / sc);
    }
    errNorm = std::sqrt(errNorm / un);
    bool finite = std::all_of(y1.begin(), y1.end(),
                              [](double v) { return std::isfinite(v); });
    if (!finite) errNorm = std::max(errNorm, 10.0);

    if (errNorm <= 1.0 && finite) {
      // Accept: store dense-output coefficients for this step.
      for (std::size_t i = 0; i < un; ++i) {
        double delta = y1[i] - y[i];
        double bspl = h * k1[i] - delta;
        traj.dense_.push_back(y[i]);
        traj.dense_.push_back(delta);
        traj.dense_.push_back(bspl);
        traj.dense_.push_back(delta - h * k7[i] - bspl);
        traj.dense_.push_back(h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] +
                                   D5 * k5[i] + D6 * k6[i] + D7 * k7[i]));
      }
      // Interleave per-coefficient: reorder into [r1 r2 r3 r4 r5] x dim.
      std::size_t base = traj.dense_.size() - 5 * un;
      std::vector<double> tmp(traj.dense_.begin() + static_cast<long>(base),
                              traj.dense_.end());
      for (std::size_t c = 0; c < 5; ++c)
        for (std::size_t i = 0; i < un; ++i)
          traj.dense_[base + c * un + i] = tmp[i * 5 + c];

      t += h;
      y.swap(y1);
      k1.swap(k7);  // FSAL
      traj.times_.push_back(t);
      traj.states_.insert(traj.states_.end(), y.begin(), y.end());

      double norm = 0.0;
      for (double v : y) norm = std::max(norm, std::abs(v));
      if (norm > opts.normCap) {
        traj.blowup_ = true;
        traj.escapeTime_ = t;
        return traj;
      }

      double fac11 = std::pow(std::max(errNorm, 1e-16), 0.17);
      double fac = fac11 / std::pow(errOld, 0.04);
      fac = std::max(0.1, std::min(5.0, 0.9 / fac));
      h = std::min(h * fac, opts.maxStep);
      errOld = std::max(errNorm, 1e-4);
    } else {
      double fac11 = std::pow(std::max(errNorm, 1e-16), 0.17);
      h *= std::max(0.1, 0.9 / fac11);
      lastStep = false;
    }
  }
  if (!lastStep && std::abs(t - tEnd) > 1e-9 * (1.0 + std::abs(tEnd)))
    throw Error("integrate: step budget exhausted at t = " + formatDouble(t));
  return traj;
}

// --- lower bound search ------------------------------------------------------

namespace {

double trajectoryMax(const ProblemSpec& spec, std::span<const double> x0,
                     double window, const IntegrateOptions& integ,
                     double* argTime) {
  Trajectory traj = integrate(spec, x0, window, integ);
  auto [v, tv] = traj.maxOf(
      [&](double t, std::span<const double> x) { return spec.observe(t, x); });
  if (argTime) *argTime = tv;
  return v;
}

// Objective for one parameter point: max Phi over the (possibly extended)
// integration window.
double objective(const ProblemSpec& spec, const InitialSampler& sampler,
                 std::span<const double> params, const LowerBoundOptions& opts,
                 double* argTime, std::vector<double>* x0Out) {
  std::vector<double> x0 = sampler.map(params);
  if (x0Out) *x0Out = x0;
  double window;
  if (opts.tEnd > 0.0)
    window = opts.tEnd;
  else if (spec.horizon.finite)
    window = spec.horizon.T;
  else
    window = 8.0;
  double value;
  try {
    value = trajectoryMax(spec, x0, window, opts.integration, argTime);
  } catch (const Error&) {
    return -std::numeric_limits<double>::infinity();  // skipped sample
  }
  if (!spec.horizon.finite && opts.tEnd == 0.0) {
    // Extend until the running maximum saturates.
    for (int round = 0; round < 8; ++round) {
      window *= 2.0;
      double next;
      try {
        next = trajectoryMax(spec, x0, window, opts.integration, argTime);
      } catch (const Error&) {
        break;
      }
      if (std::abs(next - value) < 1e-9 * (1.0 + std::abs(next))) {
        value = std::max(value, next);
        break;
      }
      value = std::max(value, next);
    }
  }
  return value;
}

}  // namespace

LowerBoundResult lowerBound(const ProblemSpec& spec,
                            const LowerBoundOptions& opts) {
  if (!spec.initialSampler)
    throw Error("lowerBound: no parameterization of the initial set available");
  const InitialSampler& sampler = *spec.initialSampler;
  const int dim = sampler.paramCount;

  LowerBoundResult best;
  auto consider = [&](double value, const std::vector<double>& x0,
                      double argTime) {
    ++best.evaluations;
    if (value > best.value ||
        (value == best.value && x0 < best.argX0)) {
      best.value = value;
      best.argX0 = x0;
      best.argTime = argTime;
    }
  };

  if (dim == 0) {
    double argTime = 0.0;
    std::vector<double> x0;
    double v = objective(spec, sampler, {}, opts, &argTime, &x0);
    consider(v, x0, argTime);
    return best;
  }

  // Multistart points: a deterministic grid plus seeded uniform draws.
  std::vector<std::vector<double>> starts;
  int gridCount = std::max(4, opts.multistarts / 2);
  if (dim == 1) {
    for (int k = 0; k < gridCount; ++k)
      starts.push_back({(k + 0.5) / gridCount});
  }
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  while (static_cast<int>(starts.size()) < opts.multistarts) {
    std::vector<double> p(static_cast<std::size_t>(dim));
    for (auto& pi : p) pi = uni(rng);
    starts.push_back(std::move(p));
  }

  struct LocalResult {
    double value;
    std::vector<double> x0;
    double argTime;
  };
  std::vector<LocalResult> results(starts.size());

  auto evalAt = [&](std::span<const double> p, double* argTime,
                    std::vector<double>* x0) {
    return objective(spec, sampler, p, opts, argTime, x0);
  };

  parallelFor(starts.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s) {
      const auto& start = starts[s];
      double argTime = 0.0;
      std::vector<double> x0;
      if (dim == 1) {
        // Golden-section ascent in a bracket around the start.
        double width = 1.0 / gridCount;
        double a = start[0] - width, b = start[0] + width;
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double c = b - gr * (b - a), d = a + gr * (b - a);
        double dummyT;
        auto val1 = [&](double s1) {
          double p[1] = {s1};
          return evalAt(p, &dummyT, nullptr);
        };
        double fc = val1(c), fd = val1(d);
        for (int it = 0; it < opts.localIterations && (b - a) > 1e-12; ++it) {
          if (fc > fd) {
            b = d; d = c; fd = fc;
            c = b - gr * (b - a);
            fc = val1(c);
          } else {
            a = c; c = d; fc = fd;
            d = a + gr * (b - a);
            fd = val1(d);
          }
        }
        double p[1] = {0.5 * (a + b)};
        double v = evalAt(p, &argTime, &x0);
        results[s] = {v, x0, argTime};
      } else {
        // Nelder-Mead.
        int np = dim + 1;
        std::vector<std::vector<double>> simplex(static_cast<std::size_t>(np), start);
        for (int i = 0; i < dim; ++i)
          simplex[static_cast<std::size_t>(i) + 1][static_cast<std::size_t>(i)] += 0.15;
        std::vector<double> fvals(static_cast<std::size_t>(np));
        double dummyT;
        for (int i = 0; i < np; ++i)
          fvals[static_cast<std::size_t>(i)] =
              evalAt(simplex[static_cast<std::size_t>(i)], &dummyT, nullptr);
        for (int it = 0; it < opts.localIterations; ++it) {
          // Sort descending (maximization).
          std::vector<int> order(static_cast<std::size_t>(np));
          for (int i = 0; i < np; ++i) order[static_cast<std::size_t>(i)] = i;
          std::sort(order.begin(), order.end(), [&](int a1, int b1) {
            return fvals[static_cast<std::size_t>(a1)] > fvals[static_cast<std::size_t>(b1)];
          });
          std::vector<std::vector<double>> sx;
          std::vector<double> sf;
          for (int i : order) {
            sx.push_back(simplex[static_cast<std::size_t>(i)]);
            sf.push_back(fvals[static_cast<std::size_t>(i)]);
          }
          simplex = sx;
          fvals = sf;
          if (std::abs(fvals.front() - fvals.back()) <
              1e-12 * (1.0 + std::abs(fvals.front())))
            break;
          std::vector<double> centroid(static_cast<std::size_t>(dim), 0.0);
          for (int i = 0; i < np - 1; ++i)
            for (int j = 0; j < dim; ++j)
              centroid[static_cast<std::size_t>(j)] +=
                  simplex[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] / (np - 1);
          auto blend = [&](double alpha) {
            std::vector<double> p(static_cast<std::size_t>(dim));
            for (int j = 0; j < dim; ++j)
              p[static_cast<std::size_t>(j)] =
                  centroid[static_cast<std::size_t>(j)] +
                  alpha * (centroid[static_cast<std::size_t>(j)] -
                           simplex.back()[static_cast<std::size_t>(j)]);
            return p;
          };
          auto refl = blend(1.0);
          double fr = evalAt(refl, &dummyT, nullptr);
          if (fr > fvals.front()) {
            auto exp1 = blend(2.0);
            double fe = evalAt(exp1, &dummyT, nullptr);
            if (fe > fr) { simplex.back() = exp1; fvals.back() = fe; }
            else { simplex.back() = refl; fvals.back() = fr; }
          } else if (fr > fvals[static_cast<std::size_t>(np - 2)]) {
            simplex.back() = refl;
            fvals.back() = fr;
          } else {
            auto con = blend(-0.5);
            double fcv = evalAt(con, &dummyT, nullptr);
            if (fcv > fvals.back()) { simplex.back() = con; fvals.back() = fcv; }
            else {
              for (int i = 1; i < np; ++i) {
                for (int j = 0; j < dim; ++j)
                  simplex[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                      0.5 * (simplex[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] +
                             simplex.front()[static_cast<std::size_t>(j)]);
                fvals[static_cast<std::size_t>(i)] =
                    evalAt(simplex[static_cast<std::size_t>(i)], &dummyT, nullptr);
              }
            }
          }
        }
        double v = evalAt(simplex.front(), &argTime, &x0);
        results[s] = {v, x0, argTime};
      }
    }
  });

  for (const auto& r : results) consider(r.value, r.x0, r.argTime);
  return best;
}

// --- certificate checks ------------------------------------------------------

CertificateFunction CertificateFunction::fromPolynomial(Polynomial p) {
  CertificateFunction f;
  f.poly = std::move(p);
  return f;
}

CertificateFunction CertificateFunction::fromFunction(ScalarFn fn) {
  CertificateFunction f;
  f.fn = std::move(fn);
  return f;
}

double CertificateFunction::value(double t, std::span<const double> x,
                                  const ProblemSpec& spec) const {
  if (fn) return fn(t, x);
  std::vector<double> point(x.size() + 1);
  point[0] = t;
  std::copy(x.begin(), x.end(), point.begin() + 1);
  return poly->embedded(spec.timeStateVars()).evaluate(point);
}

long GridSpec::nodeCount() const {
  long count = 1;
  for (int r : res) count *= r;
  return count;
}

void GridSpec::validate(std::size_t expectedAxes) const {
  if (lo.size() != expectedAxes || hi.size() != expectedAxes ||
      res.size() != expectedAxes)
    throw Error("grid has " + std::to_string(lo.size()) + " axes, expected " +
                std::to_string(expectedAxes));
  for (std::size_t i = 0; i < res.size(); ++i) {
    if (res[i] < 1) throw Error("grid resolution must be >= 1");
    if (!(hi[i] >= lo[i])) throw Error("grid bounds out of order");
  }
}

CertificateReport checkCertificate(const CertificateFunction& V,
                                   const ProblemSpec& spec,
                                   const GridSpec& grid, double tol) {
  const int n = spec.stateDim();
  grid.validate(static_cast<std::size_t>(n) + 1);
  CertificateReport report;
  report.tol = tol;
  report.gridSize = grid.nodeCount();

  const auto tx = spec.timeStateVars();
  std::optional<Polynomial> vPoly;
  std::optional<CompiledPoly> lvPoly, vPolyC;
  if (V.poly) {
    vPoly = V.poly->embedded(tx);
    lvPoly = CompiledPoly::from(lieDerivative(*vPoly, spec));
    vPolyC = CompiledPoly::from(*vPoly);
  }
  CompiledSystem sys(spec);

  auto node = [&](std::size_t axis, long idx) {
    return grid.res[axis] == 1
               ? grid.lo[axis]
               : grid.lo[axis] + (grid.hi[axis] - grid.lo[axis]) * idx /
                                     (grid.res[axis] - 1);
  };

  struct Slot {
    double maxLie = -std::numeric_limits<double>::infinity();
    std::vector<double> lieArg;
    double maxPhi = -std::numeric_limits<double>::infinity();
    std::vector<double> phiArg;
  };
  const long outer = grid.res[0];
  std::vector<Slot> slots(static_cast<std::size_t>(outer));

  parallelFor(static_cast<std::size_t>(outer), [&](std::size_t begin, std::size_t end) {
    std::vector<double> scratch;
    std::vector<double> point(static_cast<std::size_t>(n) + 1);
    std::vector<double> x(static_cast<std::size_t>(n));
    std::vector<double> dx(static_cast<std::size_t>(n));
    std::vector<long> idx(static_cast<std::size_t>(n), 0);
    const double fdStep = 1e-6;
    for (std::size_t it = begin; it < end; ++it) {
      Slot& slot = slots[it];
      point[0] = node(0, static_cast<long>(it));
      std::fill(idx.begin(), idx.end(), 0);
      bool done = false;
      while (!done) {
        for (int i = 0; i < n; ++i) {
          x[static_cast<std::size_t>(i)] =
              node(static_cast<std::size_t>(i) + 1, idx[static_cast<std::size_t>(i)]);
          point[static_cast<std::size_t>(i) + 1] = x[static_cast<std::size_t>(i)];
        }
        double t = point[0];
        double vVal, lie;
        if (lvPoly) {
          vVal = vPolyC->eval(point);
          lie = lvPoly->eval(point);
        } else {
          vVal = V.fn(t, x);
          // LV = dV/dt + F . grad V with central differences on V.
          double vp = V.fn(t + fdStep, x), vm = V.fn(t - fdStep, x);
          lie = (vp - vm) / (2.0 * fdStep);
          sys.eval(t, x, dx, scratch);
          for (int i = 0; i < n; ++i) {
            double save = x[static_cast<std::size_t>(i)];
            x[static_cast<std::size_t>(i)] = save + fdStep;
            double fp = V.fn(t, x);
            x[static_cast<std::size_t>(i)] = save - fdStep;
            double fm = V.fn(t, x);
            x[static_cast<std::size_t>(i)] = save;
            lie += dx[static_cast<std::size_t>(i)] * (fp - fm) / (2.0 * fdStep);
          }
        }
        double phiGap = spec.observe(t, x) - vVal;
        if (lie > slot.maxLie) {
          slot.maxLie = lie;
          slot.lieArg.assign(point.begin(), point.end());
        }
        if (phiGap > slot.maxPhi) {
          slot.maxPhi = phiGap;
          slot.phiArg.assign(point.begin(), point.end());
        }
        // Advance the mixed-radix index over state axes.
        done = true;
        for (int i = n - 1; i >= 0; --i) {
          if (++idx[static_cast<std::size_t>(i)] <
              grid.res[static_cast<std::size_t>(i) + 1]) {
            done = false;
            break;
          }
          idx[static_cast<std::size_t>(i)] = 0;
        }
      }
    }
  });

  for (const auto& slot : slots) {
    if (slot.maxLie > report.maxLieViolation ||
        report.lieArgmax.empty()) {
      report.maxLieViolation = slot.maxLie;
      report.lieArgmax = slot.lieArg;
    }
    if (slot.maxPhi > report.maxPhiViolation || report.phiArgmax.empty()) {
      report.maxPhiViolation = slot.maxPhi;
      report.phiArgmax = slot.phiArg;
    }
  }
  report.pass =
      report.maxLieViolation <= tol && report.maxPhiViolation <= tol;
  return report;
}

// --- limit cycle -------------------------------------------------------------

double maxOnLimitCycle(const ProblemSpec& spec, const LimitCycleOptions& opts) {
  if (spec.stateDim() != 2)
    throw Error("maxOnLimitCycle supports two-state systems");
  if (!spec.autonomous())
    throw Error("maxOnLimitCycle requires autonomous dynamics");
  std::vector<double> x0;
  if (spec.initialSampler) {
    std::vector<double> p(static_cast<std::size_t>(spec.initialSampler->paramCount), 0.25);
    x0 = spec.initialSampler->map(p);
  } else {
    x0 = {0.1, 0.1};
  }

  Trajectory traj = integrate(spec, x0, spec.horizon.t0 + opts.maxTime,
                              opts.integration);
  if (traj.blewUp()) throw Error("maxOnLimitCycle: trajectory escaped");

  // Poincare section: x2 = 0 crossings with decreasing x2 (local maxima of
  // x1), located by bisection on the dense output.
  auto x2At = [&](double t) { return traj.at(t)[1]; };
  std::vector<double> crossings;
  const auto& ts = traj.times();
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    if (ts[i] < spec.horizon.t0 + opts.transientTime) continue;
    double a = ts[i], b = ts[i + 1];
    double fa = x2At(a), fb = x2At(b);
    if (!(fa > 0.0 && fb <= 0.0)) continue;
    for (int k = 0; k < 80; ++k) {
      double m = 0.5 * (a + b);
      (x2At(m) > 0.0 ? a : b) = m;
    }
    crossings.push_back(0.5 * (a + b));
  }
  if (crossings.size() < 3)
    throw Error("maxOnLimitCycle: no periodic return detected within budget");

  double period = crossings.back() - crossings[crossings.size() - 2];
  double prev = crossings[crossings.size() - 2] - crossings[crossings.size() - 3];
  if (std::abs(period - prev) > opts.periodRelTol * period)
    throw Error("maxOnLimitCycle: period estimate did not stabilize");

  // Maximum of the observable over one full period.
  double tA = crossings[crossings.size() - 2];
  double tB = tA + period;
  double best = -std::numeric_limits<double>::infinity();
  const int samples = 4000;
  double bestT = tA;
  for (int k = 0; k <= samples; ++k) {
    double t = tA + (tB - tA) * k / samples;
    auto x = traj.at(t);
    double v = spec.observe(t, x);
    if (v > best) {
      best = v;
      bestT = t;
    }
  }
  // Golden-section polish around the best sample.
  double a = std::max(tA, bestT - (tB - tA) / samples);
  double b = std::min(tB, bestT + (tB - tA) / samples);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  auto val = [&](double t) {
    auto x = traj.at(t);
    return spec.observe(t, x);
  };
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = val(c), fd = val(d);
  for (int it = 0; it < 80; ++it) {
    if (fc > fd) {
      b = d; d = c; fd = fc;
      c = b - gr * (b - a);
      fc = val(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + gr * (b - a);
      fd = val(d);
    }
  }
  return std::max(best, val(0.5 * (a + b)));
}

}  // namespace ebound
