#include "cplab/diagram.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "cplab/json_io.hpp"
#include "cplab/rng.hpp"

namespace cplab {

namespace {

constexpr std::array<std::string_view, 5> kMarkNames = {"right", "left", "up", "down", "star"};

int positive_mod(int a, int m) {
  const int r = a % m;
  return r < 0 ? r + m : r;
}

}  // namespace

std::string_view mark_name(Mark m) { return kMarkNames[static_cast<std::size_t>(m)]; }

Mark parse_mark(std::string_view s) {
  for (std::size_t i = 0; i < kMarkNames.size(); ++i)
    if (kMarkNames[i] == s) return static_cast<Mark>(i);
  throw std::invalid_argument("unknown mark: " + std::string(s));
}

Vertex SpaceTimeBox::canonical(Vertex v) const {
  if (!cylinder) return v;
  return {box.x0 + positive_mod(v.x - box.x0, box.width()), v.y};
}

int SpaceTimeBox::distance(Vertex a, Vertex b) const {
  if (!cylinder) return linf_distance(a, b);
  const int w = box.width();
  const int dx = positive_mod(a.x - b.x, w);
  return std::max(std::min(dx, w - dx), std::abs(a.y - b.y));
}

Diagram::Diagram(SpaceTimeBox region, RateParams params, std::uint64_t seed)
    : region_(region), params_(params), seed_(seed), offsets_(region.box.count() + 1, 0) {
  if (!(region.depth > 0.0)) throw std::invalid_argument("diagram depth must be positive");
}

std::span<const MarkedPoint> Diagram::points(Vertex v) const {
  const Vertex c = region_.canonical(v);
  if (!region_.box.contains(c)) throw std::out_of_range("vertex outside diagram box");
  const std::size_t i = region_.box.index(c);
  return {points_.data() + offsets_[i], points_.data() + offsets_[i + 1]};
}

DiagramBuilder::DiagramBuilder(SpaceTimeBox region, RateParams params, std::uint64_t seed)
    : region_(region), params_(params), seed_(seed), lists_(region.box.count()) {}

void DiagramBuilder::add(Vertex v, double time, Mark mark) {
  const Vertex c = region_.canonical(v);
  if (!region_.box.contains(c)) throw std::out_of_range("point outside diagram box");
  if (!(time <= 0.0 && time >= -region_.depth)) throw std::out_of_range("point outside time range");
  lists_[region_.box.index(c)].push_back({time, mark});
}

Diagram DiagramBuilder::build() && {
  Diagram d(region_, params_, seed_);
  std::size_t total = 0;
  for (const auto& l : lists_) total += l.size();
  d.points_.reserve(total);
  for (std::size_t i = 0; i < lists_.size(); ++i) {
    auto& l = lists_[i];
    std::sort(l.begin(), l.end(), [](const MarkedPoint& a, const MarkedPoint& b) { return a.time > b.time; });
    for (std::size_t j = 1; j < l.size(); ++j)
      if (!(l[j].time < l[j - 1].time))
        l[j].time = std::nextafter(l[j - 1].time, -std::numeric_limits<double>::infinity());
    d.points_.insert(d.points_.end(), l.begin(), l.end());
    d.offsets_[i + 1] = static_cast<std::uint32_t>(d.points_.size());
  }
  return d;
}

Diagram sample_region(const SpaceTimeBox& region, const RateParams& params, std::uint64_t seed) {
  Diagram d(region, params, seed);
  const double rate = params.total_rate();
  const double p_arrow = params.arrow_probability();
  const double expected = rate * region.depth * static_cast<double>(region.box.count());
  d.points_.reserve(static_cast<std::size_t>(expected * 1.05) + 16);
  for (std::size_t i = 0; i < region.box.count(); ++i) {
    const Vertex v = region.box.at(i);
    CounterRng rng(vertex_key(seed, v.x, v.y));
    double t = 0.0;
    double last = 0.0;
    bool first = true;
    for (;;) {
      t -= rng.exponential(rate);
      const double u_type = rng.uniform();
      const double u_dir = rng.uniform();
      if (t < -region.depth) break;
      double placed = t;
      if (!first && !(placed < last))
        placed = std::nextafter(last, -std::numeric_limits<double>::infinity());
      const Mark m = u_type < p_arrow ? kArrows[static_cast<std::size_t>(std::min(3, static_cast<int>(u_dir * 4.0)))]
                                      : Mark::star;
      d.points_.push_back({placed, m});
      last = placed;
      t = placed;
      first = false;
    }
    d.offsets_[i + 1] = static_cast<std::uint32_t>(d.points_.size());
  }
  return d;
}

Diagram sample_diagram(const GeometryPlan& geometry, const RateParams& params, std::uint64_t seed) {
  Diagram d = sample_region({geometry.box_B, geometry.time_depth, false}, params, seed);
  d.geometry_ = geometry;
  return d;
}

Diagram restrict_diagram(const Diagram& d, const SpaceTimeBox& region) {
  if (region.depth > d.depth()) throw std::invalid_argument("restriction deeper than diagram");
  if (region.cylinder != d.region().cylinder) throw std::invalid_argument("restriction changes topology");
  if (!region.cylinder && !d.box().contains(region.box))
    throw std::invalid_argument("restriction box outside diagram");
  DiagramBuilder b(region, d.params(), d.seed());
  for (std::size_t i = 0; i < region.box.count(); ++i) {
    const Vertex v = region.box.at(i);
    for (const auto& p : d.points(v)) {
      if (p.time < -region.depth) break;
      b.add(v, p.time, p.mark);
    }
  }
  return std::move(b).build();
}

void write_diagram(std::ostream& os, const Diagram& d) {
  nlohmann::json h;
  h["box"] = to_json(d.box());
  h["depth"] = d.depth();
  h["cylinder"] = d.region().cylinder;
  h["params"] = to_json(d.params());
  h["seed"] = d.seed();
  if (d.geometry()) h["n"] = d.geometry()->n;
  os << h.dump() << '\n';
  char buf[64];
  for (std::size_t i = 0; i < d.box().count(); ++i) {
    const Vertex v = d.box().at(i);
    for (const auto& p : d.points(v)) {
      std::snprintf(buf, sizeof buf, "%.17g", p.time);
      os << v.x << ' ' << v.y << ' ' << buf << ' ' << mark_name(p.mark) << '\n';
    }
  }
}

Diagram read_diagram(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("diagram: missing header");
  const auto h = nlohmann::json::parse(line);
  SpaceTimeBox region{rect_from_json(h.at("box")), h.at("depth").get<double>(),
                      h.at("cylinder").get<bool>()};
  DiagramBuilder b(region, params_from_json(h.at("params")), h.at("seed").get<std::uint64_t>());
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    Vertex v;
    double t;
    std::string m;
    if (!(ls >> v.x >> v.y >> t >> m)) throw std::runtime_error("diagram: malformed line: " + line);
    b.add(v, t, parse_mark(m));
  }
  Diagram d = std::move(b).build();
  if (h.contains("n")) {
    const GeometryPlan g = make_geometry(h.at("n").get<int>());
    if (g.box_B == region.box && g.time_depth == region.depth) d.geometry_ = g;
  }
  return d;
}

}  // namespace cplab
