#include "cplab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace cplab {

int linf_distance(Vertex a, Vertex b) {
  return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y));
}

int linf_distance(const Rect& a, const Rect& b) {
  const int dx = std::max({0, b.x0 - a.x1, a.x0 - b.x1});
  const int dy = std::max({0, b.y0 - a.y1, a.y0 - b.y1});
  return std::max(dx, dy);
}

int floor_sqrt(long long n) {
  if (n < 0) throw std::invalid_argument("floor_sqrt: negative argument");
  auto r = static_cast<long long>(std::sqrt(static_cast<double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return static_cast<int>(r);
}

GeometryPlan make_geometry(int n) {
  if (n < 1) throw std::invalid_argument("make_geometry: n must be >= 1");
  GeometryPlan g;
  g.n = n;
  g.box_B = {0, 0, 6 * n, 3 * n};
  g.box_L = {n, n, 5 * n, 2 * n};
  g.time_depth = static_cast<double>(n);
  g.trunc_radius = floor_sqrt(n);
  g.trunc_depth = std::sqrt(static_cast<double>(n));
  return g;
}

Rect cylinder_box(const GeometryPlan& g) { return {0, 0, 6 * g.n - 1, 3 * g.n}; }

}  // namespace cplab
