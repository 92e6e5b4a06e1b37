#include "cplab/occupancy.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "cplab/json_io.hpp"
#include "cplab/reachability.hpp"

namespace cplab {

std::string to_string(FieldKind k) {
  switch (k) {
    case FieldKind::sigma_n: return "sigma_n";
    case FieldKind::eta_n: return "eta_n";
    case FieldKind::eta_n_delta: return "eta_n_delta";
  }
  return "?";
}

FieldKind parse_field_kind(const std::string& s) {
  if (s == "sigma_n") return FieldKind::sigma_n;
  if (s == "eta_n") return FieldKind::eta_n;
  if (s == "eta_n_delta") return FieldKind::eta_n_delta;
  throw std::invalid_argument("unknown field kind: " + s);
}

OccupancyField::OccupancyField(Rect box, Provenance provenance, bool cylinder)
    : box_(box), provenance_(provenance), cylinder_(cylinder), bits_(box.count(), 0) {
  if (box.empty()) throw std::invalid_argument("empty field box");
}

Vertex OccupancyField::wrap(Vertex v) const {
  if (!cylinder_) return v;
  const int w = box_.width();
  int r = (v.x - box_.x0) % w;
  if (r < 0) r += w;
  return {box_.x0 + r, v.y};
}

std::size_t OccupancyField::occupied() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

SpaceTimeBox occupancy_region(const Rect& targets, int n) {
  return {targets.grown(floor_sqrt(n)), std::sqrt(static_cast<double>(n)), false};
}

OccupancyField occupancy_from_diagram(const Diagram& d, const Rect& targets, int n, FieldKind kind) {
  Provenance prov{kind, n, d.params(), std::nullopt, d.seed()};
  const bool cyl = d.region().cylinder && targets.x0 == d.box().x0 && targets.x1 == d.box().x1;
  OccupancyField f(targets, prov, cyl);
  for (std::size_t i = 0; i < targets.count(); ++i) {
    const Vertex x = targets.at(i);
    f.set(x, reachable(d, BoundarySpec::for_scale(x, n)));
  }
  return f;
}

OccupancyField sample_occupancy_field(const GeometryPlan& geometry, const RateParams& params,
                                      std::uint64_t seed, std::optional<Rect> targets) {
  const Rect t = targets.value_or(geometry.box_L);
  const SpaceTimeBox region = occupancy_region(t, geometry.n);
  if (!geometry.box_B.contains(region.box))
    throw std::invalid_argument("targets too close to the boundary of B");
  const Diagram d = sample_region(region, params, seed);
  return occupancy_from_diagram(d, t, geometry.n, FieldKind::eta_n);
}

void write_pbm(std::ostream& os, const OccupancyField& f) {
  nlohmann::json h;
  const auto& p = f.provenance();
  h["kind"] = to_string(p.kind);
  h["n"] = p.n;
  h["params"] = to_json(p.params);
  if (p.delta) h["delta"] = *p.delta;
  h["seed"] = p.seed;
  h["box"] = to_json(f.box());
  h["cylinder"] = f.cylinder();
  os << "P1\n# " << h.dump() << '\n' << f.box().width() << ' ' << f.box().height() << '\n';
  // top row first, as images are drawn
  for (int y = f.box().y1; y >= f.box().y0; --y) {
    for (int x = f.box().x0; x <= f.box().x1; ++x) {
      if (x > f.box().x0) os << ' ';
      os << (f({x, y}) ? '1' : '0');
    }
    os << '\n';
  }
}

OccupancyField read_pbm(std::istream& is) {
  std::string line;
  std::getline(is, line);
  if (line != "P1") throw std::runtime_error("pbm: expected P1");
  std::getline(is, line);
  if (line.rfind("# ", 0) != 0) throw std::runtime_error("pbm: missing provenance comment");
  const auto h = nlohmann::json::parse(line.substr(2));
  Provenance p;
  p.kind = parse_field_kind(h.at("kind").get<std::string>());
  p.n = h.at("n").get<int>();
  p.params = params_from_json(h.at("params"));
  if (h.contains("delta")) p.delta = h.at("delta").get<double>();
  p.seed = h.at("seed").get<std::uint64_t>();
  const Rect box = rect_from_json(h.at("box"));
  OccupancyField f(box, p, h.at("cylinder").get<bool>());
  int w = 0;
  int hgt = 0;
  is >> w >> hgt;
  if (w != box.width() || hgt != box.height()) throw std::runtime_error("pbm: size mismatch");
  for (int y = box.y1; y >= box.y0; --y) {
    for (int x = box.x0; x <= box.x1; ++x) {
      char c = 0;
      is >> c;
      if (c != '0' && c != '1') throw std::runtime_error("pbm: bad pixel");
      f.set({x, y}, c == '1');
    }
  }
  return f;
}

}  // namespace cplab
