#pragma once

#include <cstddef>

#include "cplab/diagram.hpp"

namespace cplab {

/// Sources of the truncated occupancy variable at `center`: every space-time
/// point on the L-infinity shell d(center, y) = radius, and the time floor
/// t = -depth.
struct BoundarySpec {
  Vertex center;
  int radius = 1;
  double depth = 1.0;

  /// radius floor(sqrt n), depth sqrt n.
  static BoundarySpec for_scale(Vertex center, int n);
};

/// Closed space-time region a reachability query may read:
/// (L-infinity ball of `radius` around `center`) x [-depth, 0].
struct Footprint {
  Vertex center;
  int radius = 0;
  double depth = 0.0;

  bool contains(const Diagram& d, Vertex v, double t) const {
    return d.distance(v, center) <= radius && t >= -depth && t <= 0.0;
  }
};

Footprint dependency_footprint(const BoundarySpec& b);
/// The stable query also inspects recovery marks one step beyond the ball and
/// up to `width` below the floor.
Footprint stable_footprint(const BoundarySpec& b, double width);

/// Records every diagram point a query inspects and counts those that fall
/// outside the footprint it was given.
class ReadTracker {
 public:
  explicit ReadTracker(Footprint allowed) : allowed_(allowed) {}

  void record(const Diagram& d, Vertex v, double t) {
    ++reads_;
    if (!allowed_.contains(d, v, t)) ++violations_;
  }
  std::size_t reads() const { return reads_; }
  std::size_t violations() const { return violations_; }
  const Footprint& allowed() const { return allowed_; }

 private:
  Footprint allowed_;
  std::size_t reads_ = 0;
  std::size_t violations_ = 0;
};

/// 1 iff some active path runs from the boundary of `b` to (center, 0).
///
/// Reverse-time sweep from (center, 0): keeps the set of vertices whose axis
/// currently reaches the target, deletes a vertex at a recovery mark on it and
/// adds a vertex at an arrow from it into the set.  Stops as soon as the set
/// touches the shell or empties.
bool reachable(const Diagram& d, const BoundarySpec& b, ReadTracker* tracker = nullptr);

/// As reachable, restricted to paths that contain no arrow point (y,s) with a
/// recovery mark at some (z,u), d(y,z) <= 1, |u - s| < width.  Such arrow
/// points block the path whether or not the arrow is traversed.
bool delta_stable_reachable(const Diagram& d, const BoundarySpec& b, double width,
                            ReadTracker* tracker = nullptr);

/// Whether the arrow point (y, s) has a recovery mark within L-infinity
/// distance 1 and time distance strictly less than width.
bool is_delta_dirty(const Diagram& d, Vertex y, double s, double width, ReadTracker* tracker = nullptr);

}  // namespace cplab
