#include "cplab/reachability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

namespace cplab {

BoundarySpec BoundarySpec::for_scale(Vertex center, int n) {
  if (n < 1) throw std::invalid_argument("scale must be >= 1");
  return {center, floor_sqrt(n), std::sqrt(static_cast<double>(n))};
}

Footprint dependency_footprint(const BoundarySpec& b) { return {b.center, b.radius, b.depth}; }

Footprint stable_footprint(const BoundarySpec& b, double width) {
  return {b.center, b.radius + 1, b.depth + width};
}

namespace {

void check_boundary(const Diagram& d, const BoundarySpec& b, int margin) {
  if (b.radius < 1) throw std::invalid_argument("boundary radius must be >= 1");
  if (!(b.depth > 0.0)) throw std::invalid_argument("boundary depth must be positive");
  if (b.depth > d.depth()) throw std::invalid_argument("boundary floor below diagram depth");
  const int reach = b.radius + margin;
  const Rect& box = d.box();
  if (d.region().cylinder) {
    if (2 * reach + 1 > box.width() || b.center.y - reach < box.y0 || b.center.y + reach > box.y1)
      throw std::invalid_argument("boundary exceeds diagram box");
  } else if (!box.contains(Rect{b.center.x - reach, b.center.y - reach, b.center.x + reach,
                                b.center.y + reach})) {
    throw std::invalid_argument("boundary exceeds diagram box");
  }
}

struct Scratch {
  std::vector<std::uint8_t> in_set;
  std::vector<std::uint8_t> watched;
  std::vector<std::span<const MarkedPoint>> lists;
  std::vector<std::uint32_t> cursor;
  std::vector<std::pair<double, int>> heap;
};

class Sweep {
 public:
  Sweep(const Diagram& d, const BoundarySpec& b, double width, ReadTracker* tracker)
      : d_(d), b_(b), width_(width), tracker_(tracker), side_(2 * b.radius + 1) {
    thread_local Scratch scratch;
    s_ = &scratch;
    const auto cells = static_cast<std::size_t>(side_) * static_cast<std::size_t>(side_);
    s_->in_set.assign(cells, 0);
    s_->watched.assign(cells, 0);
    s_->lists.resize(cells);
    s_->cursor.resize(cells);
    s_->heap.clear();
  }

  bool run() {
    const int c = local(0, 0);
    s_->in_set[c] = 1;
    set_size_ = 1;
    const double top = std::numeric_limits<double>::infinity();
    watch(c, top);
    watch_neighbours(0, 0, top);

    auto& heap = s_->heap;
    while (!heap.empty()) {
      std::pop_heap(heap.begin(), heap.end());
      const auto [t, li] = heap.back();
      heap.pop_back();
      const MarkedPoint p = s_->lists[li][s_->cursor[li]];
      ++s_->cursor[li];
      push_next(li);

      const int dx = li % side_ - b_.radius;
      const int dy = li / side_ - b_.radius;
      const Vertex v{b_.center.x + dx, b_.center.y + dy};
      if (tracker_) tracker_->record(d_, v, p.time);

      if (p.mark == Mark::star) {
        if (s_->in_set[li] && remove(li)) return false;
        continue;
      }
      const Vertex off = arrow_offset(p.mark);
      const int tx = dx + off.x;
      const int ty = dy + off.y;
      const bool target_in = std::abs(tx) <= b_.radius && std::abs(ty) <= b_.radius &&
                             s_->in_set[local(tx, ty)];
      if (!s_->in_set[li] && !target_in) continue;
      if (width_ > 0.0 && is_delta_dirty(d_, v, p.time, width_, tracker_)) {
        if (s_->in_set[li] && remove(li)) return false;
        continue;
      }
      if (target_in && !s_->in_set[li]) {
        if (std::max(std::abs(dx), std::abs(dy)) == b_.radius) return true;
        s_->in_set[li] = 1;
        ++set_size_;
        watch_neighbours(dx, dy, p.time);
      }
    }
    return set_size_ > 0;
  }

 private:
  int local(int dx, int dy) const { return (dy + b_.radius) * side_ + (dx + b_.radius); }

  // True when the set became empty.
  bool remove(int li) {
    s_->in_set[li] = 0;
    return --set_size_ == 0;
  }

  void watch(int li, double now) {
    if (s_->watched[li]) return;
    s_->watched[li] = 1;
    const int dx = li % side_ - b_.radius;
    const int dy = li / side_ - b_.radius;
    auto list = d_.points({b_.center.x + dx, b_.center.y + dy});
    s_->lists[li] = list;
    const auto it = std::partition_point(list.begin(), list.end(),
                                         [now](const MarkedPoint& p) { return p.time >= now; });
    s_->cursor[li] = static_cast<std::uint32_t>(it - list.begin());
    push_next(li);
  }

  void watch_neighbours(int dx, int dy, double now) {
    for (Mark m : kArrows) {
      const Vertex o = arrow_offset(m);
      const int nx = dx + o.x;
      const int ny = dy + o.y;
      if (std::abs(nx) <= b_.radius && std::abs(ny) <= b_.radius) watch(local(nx, ny), now);
    }
  }

  void push_next(int li) {
    const auto& list = s_->lists[li];
    const auto k = s_->cursor[li];
    if (k < list.size() && list[k].time >= -b_.depth) {
      s_->heap.emplace_back(list[k].time, li);
      std::push_heap(s_->heap.begin(), s_->heap.end());
    }
  }

  const Diagram& d_;
  BoundarySpec b_;
  double width_;
  ReadTracker* tracker_;
  int side_;
  Scratch* s_ = nullptr;
  int set_size_ = 0;
};

}  // namespace

bool is_delta_dirty(const Diagram& d, Vertex y, double s, double width, ReadTracker* tracker) {
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      const Vertex z{y.x + dx, y.y + dy};
      if (!d.contains(z)) continue;
      auto list = d.points(z);
      // list is in decreasing time; find the first point with time < s + width
      auto it = std::partition_point(list.begin(), list.end(),
                                     [&](const MarkedPoint& p) { return p.time >= s + width; });
      for (; it != list.end() && it->time > s - width; ++it) {
        if (tracker) tracker->record(d, z, it->time);
        if (it->mark == Mark::star) return true;
      }
    }
  }
  return false;
}

bool reachable(const Diagram& d, const BoundarySpec& b, ReadTracker* tracker) {
  check_boundary(d, b, 0);
  return Sweep(d, b, 0.0, tracker).run();
}

bool delta_stable_reachable(const Diagram& d, const BoundarySpec& b, double width,
                            ReadTracker* tracker) {
  if (!(width > 0.0)) throw std::invalid_argument("stability width must be positive");
  check_boundary(d, b, 1);
  return Sweep(d, b, width, tracker).run();
}

}  // namespace cplab
