#include "doctest.h"

#include <cmath>
#include <sstream>
#include <vector>

#include "cplab/occupancy.hpp"
#include "cplab/reachability.hpp"
#include "cplab/rng.hpp"
#include "cplab/stats.hpp"
#include "oracles.hpp"

using namespace cplab;

namespace {

const RateParams kHalf = RateParams::from_q(0.5);

Diagram empty_diagram(Rect box, double depth) {
  return DiagramBuilder({box, depth, false}, kHalf, 0).build();
}

// Diagram with a random copy of d's points, one star replaced by an arrow.
Diagram with_star_replaced(const Diagram& d, std::size_t which, Mark arrow) {
  DiagramBuilder b(d.region(), d.params(), d.seed());
  std::size_t seen = 0;
  for (std::size_t i = 0; i < d.box().count(); ++i) {
    const Vertex v = d.box().at(i);
    for (const auto& p : d.points(v)) {
      Mark m = p.mark;
      if (m == Mark::star && seen++ == which) m = arrow;
      b.add(v, p.time, m);
    }
  }
  return std::move(b).build();
}

std::size_t star_count(const Diagram& d) {
  std::size_t s = 0;
  for (std::size_t i = 0; i < d.box().count(); ++i)
    for (const auto& p : d.points(d.box().at(i))) s += p.mark == Mark::star;
  return s;
}

}  // namespace

TEST_CASE("empty diagram: the bare axis reaches the target") {
  const Diagram d = empty_diagram({0, 0, 4, 4}, 4.0);
  CHECK(reachable(d, {{2, 2}, 2, 4.0}));
  CHECK(delta_stable_reachable(empty_diagram({0, 0, 6, 6}, 4.0), {{3, 3}, 2, 4.0}, 0.5));
}

TEST_CASE("a recovery mark on the target axis with no arrows blocks everything") {
  DiagramBuilder b({{0, 0, 4, 4}, 4.0, false}, kHalf, 0);
  b.add({2, 2}, -2.0, Mark::star);
  const Diagram d = std::move(b).build();
  CHECK_FALSE(reachable(d, {{2, 2}, 1, 4.0}));
  CHECK_FALSE(reachable(d, {{2, 2}, 2, 4.0}));
}

TEST_CASE("hand-built jump from a neighbour") {
  DiagramBuilder b({{0, 0, 4, 4}, 3.0, false}, kHalf, 0);
  b.add({1, 2}, -1.0, Mark::right);
  b.add({2, 2}, -2.0, Mark::star);
  const Diagram d = std::move(b).build();
  CHECK(reachable(d, {{2, 2}, 1, 3.0}));
  // w is off the shell at radius 2 but its axis still reaches the floor
  CHECK(reachable(d, {{2, 2}, 2, 3.0}));

  DiagramBuilder c({{0, 0, 4, 4}, 3.0, false}, kHalf, 0);
  c.add({1, 2}, -1.0, Mark::right);
  c.add({1, 2}, -1.5, Mark::star);
  c.add({2, 2}, -2.0, Mark::star);
  const Diagram e = std::move(c).build();
  CHECK(reachable(e, {{2, 2}, 1, 3.0}));
  CHECK_FALSE(reachable(e, {{2, 2}, 2, 3.0}));
  // an arrow pointing away does not help
  DiagramBuilder f({{0, 0, 4, 4}, 3.0, false}, kHalf, 0);
  f.add({2, 2}, -1.0, Mark::left);
  f.add({2, 2}, -2.0, Mark::star);
  CHECK_FALSE(reachable(std::move(f).build(), {{2, 2}, 1, 3.0}));
}

TEST_CASE("boundary outside the diagram is rejected") {
  const Diagram d = empty_diagram({0, 0, 4, 4}, 2.0);
  CHECK_THROWS_AS(reachable(d, {{1, 1}, 2, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(reachable(d, {{2, 2}, 2, 3.0}), std::invalid_argument);
  CHECK_THROWS_AS(reachable(d, {{2, 2}, 0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(delta_stable_reachable(d, {{2, 2}, 2, 2.0}, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(delta_stable_reachable(d, {{2, 2}, 1, 2.0}, 0.0), std::invalid_argument);
}

TEST_CASE("reachable agrees with the forward simulator on random small diagrams") {
  int ones = 0;
  int total = 0;
  for (double q : {0.3, 0.6, 0.9}) {
    for (std::uint64_t s = 0; s < 200; ++s) {
      const Diagram d = sample_region({{0, 0, 4, 4}, 4.0, false}, RateParams::from_q(q), s);
      const bool got = reachable(d, {{2, 2}, 2, 4.0});
      CHECK(got == oracle::forward_reach(d, {2, 2}, 2, 4.0));
      ones += got;
      ++total;
      // radius 1 and a shallower floor on the same diagram
      CHECK(reachable(d, {{2, 2}, 1, 2.5}) == oracle::forward_reach(d, {2, 2}, 1, 2.5));
    }
  }
  // both outcomes occur, so the comparison is not vacuous
  CHECK(ones > 0);
  CHECK(ones < total);
}

TEST_CASE("delta-stable reachability agrees with the forward simulator") {
  for (std::uint64_t s = 0; s < 300; ++s) {
    const double q = 0.5 + 0.45 * static_cast<double>(s % 3) / 2.0;
    const Diagram d = sample_region({{0, 0, 6, 6}, 5.0, false}, RateParams::from_q(q), 1000 + s);
    for (double w : {0.05, 0.3}) {
      CHECK(delta_stable_reachable(d, {{3, 3}, 2, 4.0}, w) ==
            oracle::forward_reach(d, {3, 3}, 2, 4.0, w));
    }
  }
}

TEST_CASE("a dirty arrow is not admissible") {
  const double delta = 0.2;
  DiagramBuilder b({{0, 0, 4, 4}, 3.0, false}, kHalf, 0);
  b.add({2, 2}, -1.0, Mark::star);
  b.add({1, 2}, -0.5, Mark::right);
  b.add({1, 2}, -0.5 - delta / 2, Mark::star);
  const Diagram d = std::move(b).build();
  CHECK(reachable(d, {{2, 2}, 1, 3.0}));
  CHECK(is_delta_dirty(d, {1, 2}, -0.5, delta));
  CHECK_FALSE(is_delta_dirty(d, {1, 2}, -0.5, delta / 4));
  CHECK_FALSE(delta_stable_reachable(d, {{2, 2}, 1, 3.0}, delta));
  CHECK(delta_stable_reachable(d, {{2, 2}, 1, 3.0}, delta / 4));
}

TEST_CASE("without recovery marks stable and plain reachability coincide") {
  for (std::uint64_t s = 0; s < 100; ++s) {
    CounterRng rng(s);
    DiagramBuilder b({{0, 0, 6, 6}, 4.0, false}, kHalf, s);
    for (int k = 0; k < 60; ++k)
      b.add({rng.below(7), rng.below(7)}, -4.0 * rng.uniform(), kArrows[rng.below(4)]);
    const Diagram d = std::move(b).build();
    CHECK(delta_stable_reachable(d, {{3, 3}, 2, 4.0}, 0.5) == reachable(d, {{3, 3}, 2, 4.0}));
  }
}

TEST_CASE("stability is monotone in the width and below plain reachability") {
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const Diagram d = sample_region({{0, 0, 6, 6}, 4.0, false}, RateParams::from_q(0.85), 5000 + s);
    const BoundarySpec b{{3, 3}, 2, 4.0};
    const bool plain = reachable(d, b);
    bool prev = plain;
    for (double w : {0.01, 0.05, 0.1, 0.3, 1.0}) {
      const bool st = delta_stable_reachable(d, b, w);
      CHECK(st <= prev);
      prev = st;
    }
  }
}

TEST_CASE("replacing a recovery mark by an arrow never destroys reachability") {
  int checked = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Diagram d = sample_region({{0, 0, 4, 4}, 4.0, false}, RateParams::from_q(0.6), 7000 + s);
    if (!reachable(d, {{2, 2}, 2, 4.0})) continue;
    const std::size_t stars = star_count(d);
    for (std::size_t k = 0; k < stars; ++k) {
      const Diagram m = with_star_replaced(d, k, kArrows[k % 4]);
      CHECK(reachable(m, {{2, 2}, 2, 4.0}));
      ++checked;
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("dependency footprint") {
  const Footprint f = dependency_footprint(BoundarySpec::for_scale({0, 0}, 9));
  CHECK(f.radius == 3);
  CHECK(f.depth == 3.0);
  const Footprint g = dependency_footprint(BoundarySpec::for_scale({7, 0}, 9));
  CHECK(linf_distance(Rect{-3, -3, 3, 3}, Rect{g.center.x - 3, -3, g.center.x + 3, 3}) > 0);
  CHECK(f.radius + g.radius < linf_distance(f.center, g.center));
}

TEST_CASE("reads stay inside the footprint") {
  const GeometryPlan g = make_geometry(9);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Diagram d = sample_diagram(g, RateParams::from_q(0.8), s);
    for (Vertex x : {Vertex{10, 10}, Vertex{20, 12}, Vertex{44, 17}}) {
      const BoundarySpec b = BoundarySpec::for_scale(x, g.n);
      ReadTracker t(dependency_footprint(b));
      reachable(d, b, &t);
      CHECK(t.reads() > 0);
      CHECK(t.violations() == 0);
      ReadTracker st(stable_footprint(b, 0.3));
      delta_stable_reachable(d, b, 0.3, &st);
      CHECK(st.violations() == 0);
    }
  }
  // the tracker does notice reads outside a too-small region
  const Diagram d = sample_diagram(g, RateParams::from_q(0.9), 1);
  const BoundarySpec b = BoundarySpec::for_scale({20, 12}, g.n);
  ReadTracker narrow({b.center, 0, b.depth});
  reachable(d, b, &narrow);
  CHECK(narrow.violations() > 0);
}

TEST_CASE("truncation nesting on shared diagrams") {
  const GeometryPlan g = make_geometry(16);
  for (std::uint64_t s = 0; s < 30; ++s) {
    const Rect targets{30, 20, 40, 26};
    const Diagram d = sample_region(occupancy_region(targets, 36), RateParams::from_q(0.85), s);
    const OccupancyField f9 = occupancy_from_diagram(d, targets, 9);
    const OccupancyField f16 = occupancy_from_diagram(d, targets, g.n);
    const OccupancyField f36 = occupancy_from_diagram(d, targets, 36);
    for (std::size_t i = 0; i < targets.count(); ++i) {
      CHECK(f16.bits()[i] <= f9.bits()[i]);
      CHECK(f36.bits()[i] <= f16.bits()[i]);
    }
  }
}

TEST_CASE("occupancy density at extreme q") {
  const GeometryPlan g = make_geometry(16);
  std::size_t occ_low = 0;
  std::size_t occ_high = 0;
  std::size_t total = 0;
  const Rect targets{20, 20, 39, 29};
  for (std::uint64_t s = 0; s < 40; ++s) {
    occ_low += sample_occupancy_field(g, RateParams::from_q(0.01), s, targets).occupied();
    occ_high += sample_occupancy_field(g, RateParams::from_q(0.99), s, targets).occupied();
    total += targets.count();
  }
  // At q = 0.01 arrow paths are negligible, but the bare axis survives to the
  // floor with probability exp(-(1 - q) sqrt n), about 0.019.
  const double low = static_cast<double>(occ_low) / total;
  const double axis = std::exp(-0.99 * 4.0);
  CHECK(std::abs(low - axis) <= 3.0 * std::sqrt(axis * (1 - axis) / total) + 0.002);
  CHECK(static_cast<double>(occ_high) / total >= 0.9);
}

TEST_CASE("restricted sampling matches the field on the full box") {
  const GeometryPlan g = make_geometry(4);
  const RateParams p = RateParams::from_q(0.8);
  const Diagram full = sample_diagram(g, p, 21);
  const OccupancyField a = occupancy_from_diagram(full, g.box_L, g.n);
  const OccupancyField b = sample_occupancy_field(g, p, 21);
  CHECK(a == b);
  CHECK(b.provenance().kind == FieldKind::eta_n);
  CHECK(b.provenance().seed == 21);
  CHECK(b.box() == g.box_L);
}

TEST_CASE("occupancy bitmap round trip") {
  const GeometryPlan g = make_geometry(4);
  const OccupancyField f = sample_occupancy_field(g, RateParams::from_q(0.8), 2);
  std::stringstream ss;
  write_pbm(ss, f);
  CHECK(ss.str().rfind("P1\n# {", 0) == 0);
  const OccupancyField back = read_pbm(ss);
  CHECK(back == f);
  CHECK(back.provenance().n == 4);
  CHECK(back.provenance().params == f.provenance().params);
}

TEST_CASE("fields on distant boxes are uncorrelated") {
  const int n = 9;
  const Rect a{0, 0, 3, 3};
  const Rect b{a.x1 + 2 * 3 + 1, 0, a.x1 + 2 * 3 + 4, 3};
  std::vector<double> xa;
  std::vector<double> xb;
  const RateParams p = RateParams::from_q(0.8);
  for (std::uint64_t s = 0; s < 2000; ++s) {
    const Rect both{a.x0, a.y0, b.x1, b.y1};
    const Diagram d = sample_region(occupancy_region(both, n), p, s);
    xa.push_back(static_cast<double>(occupancy_from_diagram(d, a, n).occupied()));
    xb.push_back(static_cast<double>(occupancy_from_diagram(d, b, n).occupied()));
  }
  const Correlation c = correlation(xa, xb);
  CHECK(std::abs(c.r) <= 3.0 * c.stderr_);
}
