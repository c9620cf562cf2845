#pragma once

#include <string>
#include <vector>

#include "ebound/system.hpp"
#include "ebound/trajectories.hpp"

namespace ebound {

// Node-wise membership mask of a spacetime (or state-space) box grid in one
// of the trajectory-localization sets. Axes are (t, x...) when the defining
// function is time-dependent, (x...) otherwise.
struct LevelSetGrid {
  char kind = 'S';  // 'S': level band of V, 'R': near-zero band of LV
  std::vector<std::string> axes;
  std::vector<double> lo, hi;
  std::vector<int> res;
  std::vector<std::uint8_t> mask;  // row-major, last axis fastest
  double lambda = 0.0;
  double delta = 0.0;
  double eps = 0.0;

  long nodeCount() const;
  double nodeCoord(std::size_t axis, long index) const;
  // CSV export: header "axis1,...,axisk,member".
  void writeCsv(const std::string& path) const;
  // Compact run-length binary export (see the format documentation).
  void writeRle(const std::string& path) const;
  static LevelSetGrid readRle(const std::string& path);

  // Node-wise intersection with another grid over the identical box.
  LevelSetGrid intersect(const LevelSetGrid& other) const;
  bool subsetOf(const LevelSetGrid& other) const;
};

// S_delta = {0 <= lambda - V <= delta}: the near-maximal level band that
// must contain a near-optimal trajectory's graph up to its peak time.
LevelSetGrid computeSDelta(const Polynomial& V, double lambda, double delta,
                           const ProblemSpec& spec, const GridSpec& grid);

// R_eps = {-eps <= LV <= 0}: the near-stationary band a near-optimal
// trajectory can leave for at most delta/eps time units.
LevelSetGrid computeREps(const Polynomial& V, double eps,
                         const ProblemSpec& spec, const GridSpec& grid);

struct ContainmentAudit {
  bool applicable = false;      // trajectory reached lambda - delta
  double tStar = 0.0;           // latest time Phi >= lambda - delta
  bool inSDeltaUntilTStar = false;
  double maxBandViolation = 0.0;  // worst breach of 0 <= lambda - V <= delta
  double timeOutsideREps = 0.0;   // measure of {LV < -eps} on [t0, tStar]
  double budget = 0.0;            // delta / eps
  double samplingSlack = 0.0;     // max dense-output sample spacing
};

// Verifies that a trajectory stays in S_delta up to its last near-peak time
// and measures how long it spends outside R_eps, reporting the Chebyshev
// budget delta/eps for comparison.
ContainmentAudit auditContainment(const Polynomial& V, double lambda,
                                  double delta, double eps,
                                  const Trajectory& traj,
                                  const ProblemSpec& spec);

}  // namespace ebound
