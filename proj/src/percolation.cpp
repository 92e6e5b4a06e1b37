#include "cplab/percolation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cplab {

namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
  }
  long long size(std::size_t root) const { return static_cast<long long>(size_[root]); }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

}  // namespace

ClusterStats extract_clusters(const OccupancyField& field) {
  const Rect& box = field.box();
  const auto& bits = field.bits();
  UnionFind uf(bits.size());
  const int w = box.width();
  const int h = box.height();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (!bits[i]) continue;
      if (x + 1 < w) {
        if (bits[i + 1]) uf.unite(i, i + 1);
      } else if (field.cylinder() && w > 1) {
        const std::size_t j = static_cast<std::size_t>(y) * w;
        if (bits[j]) uf.unite(i, j);
      }
      if (y + 1 < h && bits[i + w]) uf.unite(i, i + w);
    }
  }
  ClusterStats s;
  s.box = box;
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i] && uf.find(i) == i) s.sizes.push_back(uf.size(i));
  std::sort(s.sizes.begin(), s.sizes.end());
  s.count = s.sizes.size();
  return s;
}

bool has_crossing(const OccupancyField& field, const CrossingSpec& spec) {
  const Rect& r = spec.rect;
  if (r.empty()) throw std::invalid_argument("empty crossing rectangle");
  const bool wrap = spec.wrap == Wrap::cylinder;
  if (wrap) {
    if (!field.cylinder()) throw std::invalid_argument("cylinder crossing on a non-cylinder field");
    if (r.width() > field.box().width() || r.y0 < field.box().y0 || r.y1 > field.box().y1)
      throw std::invalid_argument("crossing rectangle outside field");
  } else if (!field.box().contains(r)) {
    throw std::invalid_argument("crossing rectangle outside field");
  }
  const int w = r.width();
  const int h = r.height();
  const bool horiz = spec.direction == Direction::horizontal;
  std::vector<std::uint8_t> seen(r.count(), 0);
  std::vector<int> stack;
  auto occupied = [&](int lx, int ly) { return field({r.x0 + lx, r.y0 + ly}); };
  auto push = [&](int lx, int ly) {
    const int i = ly * w + lx;
    if (!seen[i] && occupied(lx, ly)) {
      seen[i] = 1;
      stack.push_back(i);
    }
  };
  if (horiz) {
    for (int ly = 0; ly < h; ++ly) push(0, ly);
  } else {
    for (int lx = 0; lx < w; ++lx) push(lx, 0);
  }
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    const int lx = i % w;
    const int ly = i / w;
    if (horiz ? lx == w - 1 : ly == h - 1) return true;
    if (lx > 0) push(lx - 1, ly);
    if (lx + 1 < w) push(lx + 1, ly);
    if (ly > 0) push(lx, ly - 1);
    if (ly + 1 < h) push(lx, ly + 1);
  }
  return false;
}

std::vector<Rect> cylinder_translates(int n) {
  std::vector<Rect> out;
  for (int j = 0; j < 6 * n; ++j) out.push_back({n + j, n, 5 * n + j, 2 * n});
  return out;
}

std::vector<Rect> cylinder_sixths(int n) {
  std::vector<Rect> out;
  for (int j = 0; j < 6; ++j) out.push_back({j * n, n, (j + 3) * n, 2 * n});
  return out;
}

CylinderEvent cylinder_event(const OccupancyField& field, int n) {
  const Rect& box = field.box();
  if (!field.cylinder() || box.width() != 6 * n || box.y0 > n || box.y1 < 2 * n)
    throw std::invalid_argument("cylinder event needs a cylinder field over rows [n, 2n]");
  CylinderEvent ev;
  for (const Rect& r : cylinder_sixths(n))
    ev.sixths.push_back(has_crossing(field, {r, Direction::horizontal, Wrap::cylinder}));
  // Any crossing of a translate contains a crossing of one of the sixths, so
  // the sixths rule out most fields before the full scan.
  if (std::none_of(ev.sixths.begin(), ev.sixths.end(), [](bool b) { return b; })) return ev;
  for (const Rect& r : cylinder_translates(n)) {
    if (has_crossing(field, {r, Direction::horizontal, Wrap::cylinder})) {
      ev.value = true;
      break;
    }
  }
  return ev;
}

SpaceTimeBox cylinder_event_region(int n) {
  const int r = floor_sqrt(n);
  return {{0, n - r, 6 * n - 1, 2 * n + r}, std::sqrt(static_cast<double>(n)), true};
}

}  // namespace cplab
