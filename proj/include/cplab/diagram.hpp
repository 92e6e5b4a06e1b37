#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cplab/geometry.hpp"
#include "cplab/rates.hpp"

namespace cplab {

enum class Mark : std::uint8_t { right = 0, left = 1, up = 2, down = 3, star = 4 };
inline constexpr int kMarkCount = 5;
inline constexpr std::array<Mark, 4> kArrows = {Mark::right, Mark::left, Mark::up, Mark::down};
inline constexpr std::array<Mark, 5> kMarks = {Mark::right, Mark::left, Mark::up, Mark::down,
                                               Mark::star};

constexpr bool is_arrow(Mark m) { return m != Mark::star; }
constexpr int mark_index(Mark m) { return static_cast<int>(m); }

/// Lattice step of an arrow: the arrow at v points to v + arrow_offset(m).
constexpr Vertex arrow_offset(Mark m) {
  switch (m) {
    case Mark::right: return {1, 0};
    case Mark::left: return {-1, 0};
    case Mark::up: return {0, 1};
    case Mark::down: return {0, -1};
    case Mark::star: break;
  }
  return {0, 0};
}

std::string_view mark_name(Mark m);
Mark parse_mark(std::string_view s);

struct MarkedPoint {
  double time = 0.0;
  Mark mark = Mark::star;

  friend bool operator==(const MarkedPoint&, const MarkedPoint&) = default;
};

/// A vertex rectangle times [-depth, 0], optionally wrapped horizontally into a
/// cylinder (column x1 + 1 is column x0).
struct SpaceTimeBox {
  Rect box;
  double depth = 0.0;
  bool cylinder = false;

  Vertex canonical(Vertex v) const;
  bool contains(Vertex v) const { return box.contains(canonical(v)); }
  /// L-infinity distance, measured around the cylinder when wrapped.
  int distance(Vertex a, Vertex b) const;

  friend bool operator==(const SpaceTimeBox&, const SpaceTimeBox&) = default;
};

class DiagramBuilder;

/// Marked Poisson space-time diagram.  Per-vertex point lists are sorted by
/// strictly decreasing time; the diagram is immutable once built.
class Diagram {
 public:
  Diagram(SpaceTimeBox region, RateParams params, std::uint64_t seed);

  const SpaceTimeBox& region() const { return region_; }
  const Rect& box() const { return region_.box; }
  double depth() const { return region_.depth; }
  const RateParams& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }
  const std::optional<GeometryPlan>& geometry() const { return geometry_; }

  /// Points at v (v is wrapped first on a cylinder), latest first.
  std::span<const MarkedPoint> points(Vertex v) const;
  std::size_t total_points() const { return points_.size(); }

  Vertex canonical(Vertex v) const { return region_.canonical(v); }
  bool contains(Vertex v) const { return region_.contains(v); }
  int distance(Vertex a, Vertex b) const { return region_.distance(a, b); }

  friend bool operator==(const Diagram& a, const Diagram& b) {
    return a.region_ == b.region_ && a.offsets_ == b.offsets_ && a.points_ == b.points_;
  }

 private:
  friend class DiagramBuilder;
  friend Diagram sample_diagram(const GeometryPlan&, const RateParams&, std::uint64_t);
  friend Diagram sample_region(const SpaceTimeBox&, const RateParams&, std::uint64_t);
  friend Diagram read_diagram(std::istream&);

  SpaceTimeBox region_;
  RateParams params_;
  std::uint64_t seed_;
  std::optional<GeometryPlan> geometry_;
  std::vector<std::uint32_t> offsets_;
  std::vector<MarkedPoint> points_;
};

/// Accumulates points in any order.  build() sorts each vertex list by
/// decreasing time and nudges exact ties down by one ulp.
class DiagramBuilder {
 public:
  DiagramBuilder(SpaceTimeBox region, RateParams params, std::uint64_t seed);

  void add(Vertex v, double time, Mark mark);
  Diagram build() &&;

 private:
  SpaceTimeBox region_;
  RateParams params_;
  std::uint64_t seed_;
  std::vector<std::vector<MarkedPoint>> lists_;
};

/// Diagram on B x [-n, 0].
Diagram sample_diagram(const GeometryPlan& geometry, const RateParams& params, std::uint64_t seed);

/// Diagram on an arbitrary space-time box.  Each vertex has its own stream
/// keyed by (seed, vertex) and points are generated from time 0 downwards, so
/// a smaller box or shallower depth yields exactly the restriction of a larger
/// sample with the same seed.
Diagram sample_region(const SpaceTimeBox& region, const RateParams& params, std::uint64_t seed);

/// Restriction of a diagram to a sub-box and a shallower depth.
Diagram restrict_diagram(const Diagram& d, const SpaceTimeBox& region);

/// Line format: a JSON header line, then "x y time mark" per point sorted by
/// (vertex, decreasing time).
void write_diagram(std::ostream& os, const Diagram& d);
Diagram read_diagram(std::istream& is);

}  // namespace cplab
