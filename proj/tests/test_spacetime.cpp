#include "doctest.h"

#include <cmath>
#include <sstream>
#include <vector>

#include "cplab/diagram.hpp"
#include "cplab/rates.hpp"
#include "cplab/stats.hpp"

using namespace cplab;

TEST_CASE("make_geometry boxes and radii") {
  const GeometryPlan g = make_geometry(4);
  CHECK(g.box_B == Rect{0, 0, 24, 12});
  CHECK(g.box_L == Rect{4, 4, 20, 8});
  CHECK(g.trunc_radius == 2);
  CHECK(g.time_depth == 4.0);
  CHECK(make_geometry(1).trunc_radius == 1);
  CHECK(make_geometry(1).trunc_depth == 1.0);
  CHECK(make_geometry(10).trunc_radius == 3);
  CHECK_THROWS_AS(make_geometry(0), std::invalid_argument);
  for (int n = 1; n <= 200; ++n) {
    const GeometryPlan p = make_geometry(n);
    CHECK(p.box_B.contains(p.box_L));
    CHECK(p.box_L.x0 - p.box_B.x0 >= n);
    CHECK(p.box_B.x1 - p.box_L.x1 >= n);
    if (n > 1) CHECK(n > p.trunc_radius);
    CHECK(p.trunc_radius * p.trunc_radius <= n);
    CHECK((p.trunc_radius + 1) * (p.trunc_radius + 1) > n);
    CHECK(p.time_depth >= p.trunc_depth);
  }
}

TEST_CASE("reparametrize examples") {
  CHECK(reparametrize(RateParams::from_lambda(1.0)).q() == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(reparametrize(RateParams::from_q(0.8)).lambda() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(reparametrize(RateParams::from_lambda(0.25)).q() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(reparametrize(RateParams::from_lambda(1.0)).mode() == RateMode::q);
  CHECK_THROWS_AS(RateParams::from_q(0.0), std::invalid_argument);
  CHECK_THROWS_AS(RateParams::from_q(1.0), std::invalid_argument);
  CHECK_THROWS_AS(RateParams::from_lambda(0.0), std::invalid_argument);
  CHECK_THROWS_AS(RateParams::from_lambda(-1.0), std::invalid_argument);
}

TEST_CASE("reparametrize round trip is exact") {
  for (int i = 1; i <= 100; ++i) {
    const double q = i / 101.0;
    const RateParams p = RateParams::from_q(q);
    CHECK(reparametrize(reparametrize(p)) == p);
    const RateParams l = RateParams::from_lambda(0.05 * i);
    CHECK(reparametrize(reparametrize(l)) == l);
  }
}

TEST_CASE("rates in both modes") {
  const RateParams q = RateParams::from_q(0.8);
  CHECK(q.total_rate() == 1.0);
  CHECK(q.arrow_rate() == doctest::Approx(0.2));
  CHECK(q.star_rate() == doctest::Approx(0.2));
  const RateParams l = RateParams::from_lambda(1.0);
  CHECK(l.total_rate() == 5.0);
  CHECK(l.arrow_probability() == doctest::Approx(0.8));
}

TEST_CASE("sample_diagram is deterministic and points lie in the box") {
  const GeometryPlan g = make_geometry(4);
  const RateParams p = RateParams::from_q(0.5);
  const Diagram a = sample_diagram(g, p, 17);
  const Diagram b = sample_diagram(g, p, 17);
  CHECK(a == b);
  CHECK_FALSE(a == sample_diagram(g, p, 18));
  for (std::size_t i = 0; i < g.box_B.count(); ++i) {
    const auto pts = a.points(g.box_B.at(i));
    for (std::size_t k = 0; k < pts.size(); ++k) {
      CHECK(pts[k].time <= 0.0);
      CHECK(pts[k].time >= -g.time_depth);
      if (k > 0) CHECK(pts[k].time < pts[k - 1].time);
    }
  }
  CHECK_THROWS_AS(a.points({-1, 0}), std::out_of_range);
}

TEST_CASE("per-vertex point count has mean equal to depth") {
  const RateParams p = RateParams::from_q(0.5);
  const double depth = 4.0;
  const Diagram d = sample_region({{0, 0, 99, 99}, depth, false}, p, 5);
  std::vector<double> counts;
  for (std::size_t i = 0; i < d.box().count(); ++i)
    counts.push_back(static_cast<double>(d.points(d.box().at(i)).size()));
  const MeanEstimate m = mean_estimate(counts);
  CHECK(std::abs(m.mean - depth) <= 3.0 * m.stderr_);
}

TEST_CASE("lambda mode total rate is 4 lambda + 1") {
  const RateParams p = RateParams::from_lambda(0.5);
  const Diagram d = sample_region({{0, 0, 99, 99}, 2.0, false}, p, 6);
  std::vector<double> counts;
  for (std::size_t i = 0; i < d.box().count(); ++i)
    counts.push_back(static_cast<double>(d.points(d.box().at(i)).size()));
  const MeanEstimate m = mean_estimate(counts);
  CHECK(std::abs(m.mean - 3.0 * 2.0) <= 3.0 * m.stderr_);
}

TEST_CASE("mark law passes chi-square") {
  const RateParams p = RateParams::from_q(0.8);
  const Diagram d = sample_region({{0, 0, 99, 99}, 10.0, false}, p, 7);
  std::vector<double> counts(5, 0.0);
  for (std::size_t i = 0; i < d.box().count(); ++i)
    for (const auto& pt : d.points(d.box().at(i))) counts[mark_index(pt.mark)] += 1.0;
  double total = 0.0;
  for (double c : counts) total += c;
  CHECK(total >= 1e5 * 0.9);
  for (int k = 0; k < 4; ++k) CHECK(counts[k] / total == doctest::Approx(0.2).epsilon(0.03));
  CHECK(counts[4] / total == doctest::Approx(0.2).epsilon(0.03));
  const TestResult t = chi_square_gof(counts, {0.2, 0.2, 0.2, 0.2, 0.2});
  CHECK(t.p_value > 0.01);
}

TEST_CASE("inter-point gaps are exponential and counts exchangeable") {
  const RateParams p = RateParams::from_q(0.4);
  const Diagram d = sample_region({{0, 0, 49, 49}, 20.0, false}, p, 8);
  std::vector<double> gaps;
  std::vector<double> first_half(40, 0.0);
  std::vector<double> second_half(40, 0.0);
  for (std::size_t i = 0; i < d.box().count(); ++i) {
    const auto pts = d.points(d.box().at(i));
    double prev = 0.0;
    // gaps starting in the upper half, so the floor censors none of them in practice
    for (const auto& pt : pts) {
      if (prev > -10.0) gaps.push_back(prev - pt.time);
      prev = pt.time;
    }
    const std::size_t c = std::min<std::size_t>(pts.size(), 39);
    (i < d.box().count() / 2 ? first_half : second_half)[c] += 1.0;
  }
  const TestResult ks = ks_one_sample(gaps, [](double x) { return 1.0 - std::exp(-x); });
  CHECK(ks.p_value > 0.01);
  CHECK(chi_square_two_sample(first_half, second_half).p_value > 0.01);
}

TEST_CASE("sampling a sub-region gives the restriction of the larger sample") {
  const RateParams p = RateParams::from_q(0.6);
  const Diagram big = sample_region({{0, 0, 20, 20}, 8.0, false}, p, 99);
  const SpaceTimeBox small{{3, 4, 12, 15}, 3.5, false};
  CHECK(sample_region(small, p, 99) == restrict_diagram(big, small));
}

TEST_CASE("diagram builder orders points and breaks exact ties") {
  DiagramBuilder b({{0, 0, 1, 1}, 5.0, false}, RateParams::from_q(0.5), 1);
  b.add({0, 0}, -2.0, Mark::star);
  b.add({0, 0}, -1.0, Mark::up);
  b.add({0, 0}, -2.0, Mark::right);
  const Diagram d = std::move(b).build();
  const auto pts = d.points({0, 0});
  REQUIRE(pts.size() == 3);
  CHECK(pts[0].time == -1.0);
  CHECK(pts[1].time == -2.0);
  CHECK(pts[2].time < -2.0);
  CHECK(pts[2].time == std::nextafter(-2.0, -10.0));
}

TEST_CASE("diagram text format round trips") {
  const GeometryPlan g = make_geometry(2);
  const Diagram d = sample_diagram(g, RateParams::from_lambda(0.7), 3);
  std::stringstream ss;
  write_diagram(ss, d);
  const Diagram back = read_diagram(ss);
  CHECK(back == d);
  CHECK(back.seed() == 3);
  CHECK(back.params() == d.params());
  REQUIRE(back.geometry().has_value());
  CHECK(back.geometry()->n == 2);
}

TEST_CASE("cylinder regions wrap columns") {
  const SpaceTimeBox cyl{{0, 0, 11, 3}, 2.0, true};
  CHECK(cyl.canonical({12, 1}) == Vertex{0, 1});
  CHECK(cyl.canonical({-1, 1}) == Vertex{11, 1});
  CHECK(cyl.distance({0, 0}, {11, 0}) == 1);
  const Diagram d = sample_region(cyl, RateParams::from_q(0.5), 4);
  CHECK(d.points({-1, 2}).data() == d.points({11, 2}).data());
}
