#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>

namespace cplab {

struct Vertex {
  int x = 0;
  int y = 0;

  friend auto operator<=>(const Vertex&, const Vertex&) = default;
  friend Vertex operator+(Vertex a, Vertex b) { return {a.x + b.x, a.y + b.y}; }
  friend Vertex operator-(Vertex a, Vertex b) { return {a.x - b.x, a.y - b.y}; }
};

/// Closed integer rectangle [x0, x1] x [y0, y1].
struct Rect {
  int x0 = 0;
  int y0 = 0;
  int x1 = -1;
  int y1 = -1;

  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
  std::size_t count() const {
    return empty() ? 0 : static_cast<std::size_t>(width()) * static_cast<std::size_t>(height());
  }
  bool empty() const { return x1 < x0 || y1 < y0; }
  bool contains(Vertex v) const { return v.x >= x0 && v.x <= x1 && v.y >= y0 && v.y <= y1; }
  bool contains(const Rect& r) const {
    return r.x0 >= x0 && r.x1 <= x1 && r.y0 >= y0 && r.y1 <= y1;
  }
  Rect grown(int margin) const { return {x0 - margin, y0 - margin, x1 + margin, y1 + margin}; }
  Rect translated(int dx, int dy) const { return {x0 + dx, y0 + dy, x1 + dx, y1 + dy}; }

  /// Row-major index of v (y outer), v must be contained.
  std::size_t index(Vertex v) const {
    return static_cast<std::size_t>(v.y - y0) * static_cast<std::size_t>(width()) +
           static_cast<std::size_t>(v.x - x0);
  }
  Vertex at(std::size_t i) const {
    const auto w = static_cast<std::size_t>(width());
    return {x0 + static_cast<int>(i % w), y0 + static_cast<int>(i / w)};
  }

  friend bool operator==(const Rect&, const Rect&) = default;
};

/// L-infinity distance.
int linf_distance(Vertex a, Vertex b);
/// L-infinity distance between two rectangles (0 when they overlap).
int linf_distance(const Rect& a, const Rect& b);

int floor_sqrt(long long n);

/// The boxes and truncation scales attached to a scale parameter n:
/// B = [0,6n]x[0,3n], L = [n,5n]x[n,2n], diagram times [-n,0],
/// truncation radius floor(sqrt n) and truncation depth sqrt n.
struct GeometryPlan {
  int n = 0;
  Rect box_B;
  Rect box_L;
  double time_depth = 0.0;
  int trunc_radius = 0;
  double trunc_depth = 0.0;
};

GeometryPlan make_geometry(int n);

/// B with its right column identified with column 0: columns [0, 6n).
Rect cylinder_box(const GeometryPlan& g);

}  // namespace cplab
