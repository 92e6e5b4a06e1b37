#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cplab/discretization.hpp"
#include "cplab/estimation.hpp"
#include "cplab/influence.hpp"
#include "cplab/occupancy.hpp"
#include "cplab/percolation.hpp"

namespace cplab {

/// Indicator region of the certified cylinder event: all 6n columns, rows
/// [n - r, 2n + r], down to one interval below the floor interval.
SpaceTimeBox cylinder_xregion(int n, double delta);
/// Same depth over all rows [0, 3n] of the wrapped box.
SpaceTimeBox cylinder_full_xregion(int n, double delta);

/// Independent indicator bits with their exact Bernoulli marginals.  Each
/// vertex has its own stream, so a sub-region is the restriction of a larger
/// sample with the same seed.
XField sample_xfield(const SpaceTimeBox& region, double delta, const RateParams& params,
                     std::uint64_t seed);

/// Certified occupancy on `targets`; a cylinder field when the indicator
/// region is wrapped and the targets span all its columns.
OccupancyField certified_field(const XField& xf, const Rect& targets, int n,
                               GuardRule rule = GuardRule::guard_band());

/// The cylinder event on the certified field of rows [n, 2n].
CylinderEvent certified_cylinder_event(const XField& xf, int n,
                                       GuardRule rule = GuardRule::guard_band());

/// Variable (v, k, mark) of an indicator field, numbered cell * 5 + mark.
std::size_t xvar_index(const XField& xf, Vertex v, int k, Mark m);

struct ClassKey {
  Mark mark = Mark::star;
  int k = 0;
  int row = 0;

  friend bool operator==(const ClassKey&, const ClassKey&) = default;
};

std::string to_string(const ClassKey& key);

struct SymmetryClass {
  ClassKey key;
  /// Columns of the members, in increasing order.
  std::vector<int> columns;
};

/// Classes of the variables of cylinder_full_xregion keyed by (mark, k, row).
std::vector<SymmetryClass> symmetry_classes(const GeometryPlan& g, double delta);

struct InfluenceOptions {
  /// Restrict to these classes; empty means every class.
  std::vector<ClassKey> only;
  /// Flip every member of each class instead of one random member.
  bool per_member = false;
  double level = 0.95;
  int threads = 1;
  GuardRule rule = GuardRule::guard_band();
};

struct MemberInfluence {
  int column = 0;
  BinomialEstimate estimate;
};

struct CylinderInfluence {
  InfluenceReport report;
  std::vector<ClassKey> keys;
  /// Filled with per_member; parallel to report.classes.
  std::vector<std::vector<MemberInfluence>> members;
  std::size_t replicas = 0;
};

/// Monte Carlo pivotality of the certified cylinder event per symmetry class.
/// Each replica samples the indicators of cylinder_full_xregion once; a
/// variable is pivotal when the event differs between the variable forced to
/// 0 and forced to 1.  Only targets whose certificate reads the flipped
/// variable are recomputed.
CylinderInfluence influence_mc(const GeometryPlan& g, const RateParams& params, double delta,
                               std::size_t replicas, std::uint64_t seed,
                               const InfluenceOptions& options = {});

inline constexpr double kDefaultWindowEps = 0.25;

struct WindowPoint {
  double q = 0.0;
  BinomialEstimate estimate;
};

/// First grid position where a curve reaches a level, interpolated linearly.
struct LevelCrossing {
  bool reached = false;
  /// Already at or above the level at the first grid point.
  bool censored = false;
  double q = 0.0;
};

struct ThresholdWindow {
  int n = 0;
  double delta = 0.0;
  double eps = kDefaultWindowEps;
  std::vector<WindowPoint> points;
  LevelCrossing low;
  LevelCrossing high;
  /// high.q - low.q; infinite when a level is never reached.
  double width = 0.0;
  /// Bounds from the pointwise confidence band.
  double width_lo = 0.0;
  double width_hi = 0.0;
  /// log n / log(2 / delta).
  double diff_bound_ratio = 0.0;
  bool monotone_ok = false;
};

/// Estimates P(event) over the grid (at least 5 values, increasing) and the q
/// values where it crosses eps and 1 - eps.  A cylinder event is evaluated
/// on the certified field with this delta; other events as in
/// evaluate_event.
ThresholdWindow threshold_window(const GeometryPlan& g, double delta, const EventSpec& event,
                                 const std::vector<double>& q_grid, std::size_t replicas,
                                 std::uint64_t seed, double eps = kDefaultWindowEps,
                                 double level = 0.95, int threads = 1);

LevelCrossing level_crossing(const std::vector<double>& q, const std::vector<double>& p,
                             double level);

/// Successive windows are non-increasing within their confidence bounds.
bool windows_non_increasing(const std::vector<ThresholdWindow>& ws);

}  // namespace cplab
