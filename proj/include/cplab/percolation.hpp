#pragma once

#include <cstddef>
#include <vector>

#include "cplab/occupancy.hpp"

namespace cplab {

/// Occupied clusters under 4-neighbour adjacency (columns wrap on a cylinder
/// field).
struct ClusterStats {
  std::vector<long long> sizes;
  Rect box;
  std::size_t count = 0;
};

ClusterStats extract_clusters(const OccupancyField& field);

enum class Direction { horizontal, vertical };
enum class Wrap { none, cylinder };

/// With Wrap::cylinder the rectangle's columns are read modulo the field
/// width, so a rectangle may start near the right edge and continue at
/// column 0.
struct CrossingSpec {
  Rect rect;
  Direction direction = Direction::horizontal;
  Wrap wrap = Wrap::none;
};

/// Occupied 4-connected path inside rect joining its left and right sides
/// (horizontal) or bottom and top sides (vertical).
bool has_crossing(const OccupancyField& field, const CrossingSpec& spec);

/// Horizontal translates of L_n on the cylinder: [n + j, 5n + j] x [n, 2n]
/// for j = 0 .. 6n - 1, columns mod 6n.
std::vector<Rect> cylinder_translates(int n);
/// The six rectangles [jn, (j + 3)n] x [n, 2n], columns mod 6n, j = 0 .. 5.
std::vector<Rect> cylinder_sixths(int n);

struct CylinderEvent {
  bool value = false;
  /// Crossing indicator of each rectangle of cylinder_sixths.
  std::vector<bool> sixths;
};

/// Requires a cylinder field covering all 6n columns and rows [n, 2n].
CylinderEvent cylinder_event(const OccupancyField& field, int n);

/// Rows [n - r, 2n + r] of the cylinder, all columns: the part of the
/// cylinder diagram the event reads.
SpaceTimeBox cylinder_event_region(int n);

}  // namespace cplab
