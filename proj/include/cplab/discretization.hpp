#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "json.hpp"

#include "cplab/diagram.hpp"

namespace cplab {

/// Interval index of time t <= 0 for interval length delta: interval k is
/// (-(k+1) delta, -k delta].
int interval_index(double t, double delta);

/// Indicators X_mark(v, k): whether vertex v has at least one point of that
/// mark in its k-th interval.  Five bits per (v, k), one byte of storage.
class XField {
 public:
  XField(SpaceTimeBox region, double delta, RateParams params, std::uint64_t seed);

  const SpaceTimeBox& region() const { return region_; }
  const Rect& box() const { return region_.box; }
  double depth() const { return region_.depth; }
  double delta() const { return delta_; }
  /// Number of intervals, ceil(depth / delta).
  int intervals() const { return intervals_; }
  const RateParams& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }
  std::optional<double> alpha;

  bool contains(Vertex v, int k) const {
    return region_.contains(v) && k >= 0 && k < intervals_;
  }
  bool bit(Vertex v, int k, Mark m) const {
    return (cells_[cell(v, k)] >> mark_index(m)) & 1u;
  }
  std::uint8_t marks(Vertex v, int k) const { return cells_[cell(v, k)]; }
  void set(Vertex v, int k, Mark m, bool value);

  /// Length of interval k inside [-depth, 0].
  double interval_length(int k) const;

  const std::vector<std::uint8_t>& cells() const { return cells_; }

  friend bool operator==(const XField& a, const XField& b) {
    return a.region_ == b.region_ && a.delta_ == b.delta_ && a.cells_ == b.cells_;
  }

 private:
  std::size_t cell(Vertex v, int k) const {
    return region_.box.index(region_.canonical(v)) * static_cast<std::size_t>(intervals_) +
           static_cast<std::size_t>(k);
  }

  SpaceTimeBox region_;
  double delta_;
  int intervals_;
  RateParams params_;
  std::uint64_t seed_;
  std::vector<std::uint8_t> cells_;
};

/// delta = n^-alpha.
double delta_for_scale(int n, double alpha);
inline constexpr double kDefaultAlpha = 0.25;

/// Smallest interval whose bottom lies at or below -sqrt n.
int floor_interval_index(int n, double delta);

/// Exact indicator extraction.  With `box`, only that part of the diagram.
XField discretize(const Diagram& d, double delta, std::optional<Rect> box = std::nullopt);

/// Guard bands a certified jump in interval k needs: recovery bits of both
/// endpoints must be 0 in intervals k - above .. k + below as well as k.
struct GuardRule {
  int above = 1;
  int below = 1;

  static GuardRule guard_band() { return {1, 1}; }
  static GuardRule tight() { return {0, 0}; }
};

struct WitnessStep {
  enum class Kind { dwell, jump };
  Kind kind = Kind::dwell;
  int interval = 0;
  /// Dwell: the vertex.  Jump: the arrow's tail.
  Vertex from;
  /// Dwell: same as from.  Jump: the arrow's head.
  Vertex to;
};

struct Certificate {
  Vertex target;
  int n = 0;
  bool verdict = false;
  /// Source-to-target order; empty when verdict is false.  The first step
  /// starts on the shell or at the time floor.
  std::vector<WitnessStep> witness;
  /// Interval whose bottom lies at or below -sqrt n.
  int floor_interval = 0;
};

/// Interval-level reverse reachability.  Dwelling on v through interval k
/// needs its recovery bit 0; a jump w -> v in interval k needs the arrow bit
/// and recovery bits 0 on w and v over the guard bands.  At most one jump per
/// interval.  Intervals missing from the field count as occupied by a
/// recovery mark.
Certificate certified_occupancy(const XField& xf, Vertex x, int n,
                                GuardRule rule = GuardRule::guard_band());

/// Diagram whose discretization equals xf: for each set bit a zero-truncated
/// Poisson number of points placed uniformly in the interval.
Diagram resample_consistent(const XField& xf, std::uint64_t seed);

struct SandwichResult {
  bool reachable = false;
  bool certified = false;
  bool stable = false;
  Certificate certificate;
};

/// Stability width used by the lower sandwich bound.
inline constexpr double kSandwichWidthFactor = 3.0;

/// (reachable, certified, delta-stable with width 3 delta) for target x.
/// Throws std::logic_error if certified exceeds reachable.
SandwichResult sandwich_check(const Diagram& d, double delta, Vertex x, int n,
                              GuardRule rule = GuardRule::guard_band());

/// Space-time box that sandwich_check and certified_occupancy read.
SpaceTimeBox sandwich_region(Vertex x, int n, double delta);

void write_xfield(std::ostream& os, const XField& xf);
XField read_xfield(std::istream& is);
nlohmann::json to_json(const Certificate& c);

}  // namespace cplab
