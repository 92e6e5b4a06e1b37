#include "cplab/discretization.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "cplab/json_io.hpp"
#include "cplab/reachability.hpp"
#include "cplab/rng.hpp"

namespace cplab {

int interval_index(double t, double delta) { return static_cast<int>(std::floor(-t / delta)); }

XField::XField(SpaceTimeBox region, double delta, RateParams params, std::uint64_t seed)
    : region_(region), delta_(delta), params_(params), seed_(seed) {
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  if (delta > region.depth) throw std::invalid_argument("delta exceeds diagram depth");
  intervals_ = static_cast<int>(std::ceil(region.depth / delta - 1e-12));
  cells_.assign(region.box.count() * static_cast<std::size_t>(intervals_), 0);
}

void XField::set(Vertex v, int k, Mark m, bool value) {
  auto& c = cells_[cell(v, k)];
  const auto bit = static_cast<std::uint8_t>(1u << mark_index(m));
  c = value ? static_cast<std::uint8_t>(c | bit) : static_cast<std::uint8_t>(c & ~bit);
}

double XField::interval_length(int k) const {
  return std::min(delta_, region_.depth - k * delta_);
}

double delta_for_scale(int n, double alpha) {
  if (n < 1 || !(alpha > 0.0)) throw std::invalid_argument("delta needs n >= 1 and alpha > 0");
  return std::pow(static_cast<double>(n), -alpha);
}

XField discretize(const Diagram& d, double delta, std::optional<Rect> box) {
  SpaceTimeBox region = d.region();
  if (box) {
    if (!d.box().contains(*box) ||
        (region.cylinder && (box->x0 != d.box().x0 || box->x1 != d.box().x1)))
      throw std::invalid_argument("discretize: box outside diagram");
    region.box = *box;
  }
  XField xf(region, delta, d.params(), d.seed());
  for (std::size_t i = 0; i < region.box.count(); ++i) {
    const Vertex v = region.box.at(i);
    for (const auto& p : d.points(v)) {
      const int k = std::min(interval_index(p.time, delta), xf.intervals() - 1);
      xf.set(v, k, p.mark, true);
    }
  }
  return xf;
}

int floor_interval_index(int n, double delta) {
  const double s = std::sqrt(static_cast<double>(n));
  int k = static_cast<int>(std::ceil(s / delta - 1e-9)) - 1;
  return std::max(k, 0);
}

namespace {

class Certifier {
 public:
  Certifier(const XField& xf, Vertex x, int n, GuardRule rule)
      : xf_(xf), x_(x), r_(floor_sqrt(n)), side_(2 * r_ + 1), rule_(rule) {
    if (rule.above < 0 || rule.below < 0) throw std::invalid_argument("negative guard band");
    const Rect ball{x.x - r_, x.y - r_, x.x + r_, x.y + r_};
    if (xf.region().cylinder ? 2 * r_ + 1 > xf.box().width() || ball.y0 < xf.box().y0 ||
                                   ball.y1 > xf.box().y1
                             : !xf.box().contains(ball))
      throw std::invalid_argument("certificate footprint outside the field");
    kf_ = floor_interval_index(n, xf.delta());
    if (kf_ >= xf.intervals()) throw std::invalid_argument("field does not reach the time floor");
  }

  Certificate run(int n) {
    Certificate c;
    c.target = x_;
    c.n = n;
    c.floor_interval = kf_;
    const int cells = side_ * side_;
    pred_.assign(static_cast<std::size_t>(kf_ + 1) * cells, kNone);
    std::vector<std::uint8_t> cur(cells, 0);
    std::vector<std::uint8_t> next(cells, 0);
    cur[local(x_)] = 1;
    for (int k = 0; k <= kf_; ++k) {
      std::fill(next.begin(), next.end(), 0);
      bool any = false;
      for (int i = 0; i < cells; ++i) {
        if (!cur[i]) continue;
        const Vertex v = vertex(i);
        if (star_free(v, k)) {
          next[i] = 1;
          pred(k, i) = kDwell;
          any = true;
        }
      }
      for (int i = 0; i < cells; ++i) {
        if (!cur[i]) continue;
        const Vertex v = vertex(i);
        if (!guards_free(v, k)) continue;
        for (Mark m : kArrows) {
          const Vertex w = v - arrow_offset(m);
          if (!in_ball(w) || !xf_.bit(w, k, m) || !guards_free(w, k)) continue;
          const int j = local(w);
          if (on_shell(w)) {
            pred(k, j) = static_cast<std::int8_t>(mark_index(m));
            c.verdict = true;
            c.witness = trace(k, j);
            return c;
          }
          if (!next[j]) {
            next[j] = 1;
            pred(k, j) = static_cast<std::int8_t>(mark_index(m));
            any = true;
          }
        }
      }
      if (!any) return c;
      std::swap(cur, next);
    }
    for (int i = 0; i < cells; ++i) {
      if (cur[i]) {
        c.verdict = true;
        c.witness = trace(kf_, i);
        break;
      }
    }
    return c;
  }

 private:
  static constexpr std::int8_t kNone = -1;
  static constexpr std::int8_t kDwell = 4;

  int local(Vertex v) const { return (v.y - x_.y + r_) * side_ + (v.x - x_.x + r_); }
  Vertex vertex(int i) const { return {x_.x + i % side_ - r_, x_.y + i / side_ - r_}; }
  bool in_ball(Vertex v) const { return std::abs(v.x - x_.x) <= r_ && std::abs(v.y - x_.y) <= r_; }
  bool on_shell(Vertex v) const {
    return std::max(std::abs(v.x - x_.x), std::abs(v.y - x_.y)) == r_;
  }
  std::int8_t& pred(int k, int i) { return pred_[static_cast<std::size_t>(k) * side_ * side_ + i]; }

  bool star_free(Vertex v, int k) const {
    if (k < 0) return true;
    if (k >= xf_.intervals()) return false;
    return !xf_.bit(v, k, Mark::star);
  }
  bool guards_free(Vertex v, int k) const {
    for (int j = k - rule_.above; j <= k + rule_.below; ++j)
      if (!star_free(v, j)) return false;
    return true;
  }

  // Walks predecessor links from level k, cell i up to the target.
  std::vector<WitnessStep> trace(int k, int i) {
    std::vector<WitnessStep> out;
    for (; k >= 0; --k) {
      const std::int8_t p = pred(k, i);
      const Vertex v = vertex(i);
      if (p == kDwell) {
        out.push_back({WitnessStep::Kind::dwell, k, v, v});
      } else {
        const Vertex to = v + arrow_offset(static_cast<Mark>(p));
        out.push_back({WitnessStep::Kind::jump, k, v, to});
        i = local(to);
      }
    }
    return out;
  }

  const XField& xf_;
  Vertex x_;
  int r_;
  int side_;
  GuardRule rule_;
  int kf_ = 0;
  std::vector<std::int8_t> pred_;
};

// Zero-truncated Poisson(mu) by inversion.
int zero_truncated_poisson(double mu, CounterRng& rng) {
  const double u = rng.uniform() * -std::expm1(-mu);
  double p = std::exp(-mu);
  double acc = 0.0;
  int j = 0;
  for (;;) {
    ++j;
    p *= mu / j;
    acc += p;
    if (u <= acc || j > 1000) return j;
  }
}

}  // namespace

Certificate certified_occupancy(const XField& xf, Vertex x, int n, GuardRule rule) {
  return Certifier(xf, x, n, rule).run(n);
}

Diagram resample_consistent(const XField& xf, std::uint64_t seed) {
  DiagramBuilder b(xf.region(), xf.params(), seed);
  const double delta = xf.delta();
  for (std::size_t i = 0; i < xf.box().count(); ++i) {
    const Vertex v = xf.box().at(i);
    CounterRng rng(vertex_key(seed, v.x, v.y));
    for (int k = 0; k < xf.intervals(); ++k) {
      const std::uint8_t bits = xf.marks(v, k);
      if (!bits) continue;
      const double len = xf.interval_length(k);
      for (Mark m : kMarks) {
        if (!((bits >> mark_index(m)) & 1u)) continue;
        const double rate = is_arrow(m) ? xf.params().arrow_rate() : xf.params().star_rate();
        const int count = zero_truncated_poisson(rate * len, rng);
        for (int c = 0; c < count; ++c) {
          double t;
          do {
            t = -k * delta - rng.uniform() * len;
          } while (interval_index(t, delta) != k || t < -xf.depth());
          b.add(v, t, m);
        }
      }
    }
  }
  return std::move(b).build();
}

SpaceTimeBox sandwich_region(Vertex x, int n, double delta) {
  const int r = floor_sqrt(n);
  const double s = std::sqrt(static_cast<double>(n));
  const double depth = std::max(s + kSandwichWidthFactor * delta, (floor_interval_index(n, delta) + 2) * delta);
  return {{x.x - r - 1, x.y - r - 1, x.x + r + 1, x.y + r + 1}, depth, false};
}

SandwichResult sandwich_check(const Diagram& d, double delta, Vertex x, int n, GuardRule rule) {
  const BoundarySpec b = BoundarySpec::for_scale(x, n);
  SandwichResult s;
  s.reachable = reachable(d, b);
  const Rect ball{x.x - b.radius, x.y - b.radius, x.x + b.radius, x.y + b.radius};
  const XField xf = d.region().cylinder ? discretize(d, delta) : discretize(d, delta, ball);
  s.certificate = certified_occupancy(xf, x, n, rule);
  s.certified = s.certificate.verdict;
  s.stable = delta_stable_reachable(d, b, kSandwichWidthFactor * delta);
  if (s.certified && !s.reachable) throw std::logic_error("certified target is not reachable");
  return s;
}

void write_xfield(std::ostream& os, const XField& xf) {
  nlohmann::json h;
  h["box"] = to_json(xf.box());
  h["depth"] = xf.depth();
  h["cylinder"] = xf.region().cylinder;
  h["delta"] = xf.delta();
  if (xf.alpha) h["alpha"] = *xf.alpha;
  h["K"] = xf.intervals();
  h["params"] = to_json(xf.params());
  h["seed"] = xf.seed();
  os << h.dump() << '\n';
  const auto& cells = xf.cells();
  std::vector<std::uint8_t> packed((cells.size() * kMarkCount + 7) / 8, 0);
  for (std::size_t i = 0; i < cells.size(); ++i)
    for (int m = 0; m < kMarkCount; ++m)
      if ((cells[i] >> m) & 1u) {
        const std::size_t bit = i * kMarkCount + static_cast<std::size_t>(m);
        packed[bit / 8] = static_cast<std::uint8_t>(packed[bit / 8] | (1u << (bit % 8)));
      }
  os.write(reinterpret_cast<const char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
}

XField read_xfield(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("xfield: missing header");
  const auto h = nlohmann::json::parse(line);
  XField xf({rect_from_json(h.at("box")), h.at("depth").get<double>(), h.at("cylinder").get<bool>()},
            h.at("delta").get<double>(), params_from_json(h.at("params")),
            h.at("seed").get<std::uint64_t>());
  if (h.contains("alpha")) xf.alpha = h.at("alpha").get<double>();
  if (h.at("K").get<int>() != xf.intervals()) throw std::runtime_error("xfield: interval count mismatch");
  const std::size_t cells = xf.box().count() * static_cast<std::size_t>(xf.intervals());
  std::vector<std::uint8_t> packed((cells * kMarkCount + 7) / 8, 0);
  if (!is.read(reinterpret_cast<char*>(packed.data()), static_cast<std::streamsize>(packed.size())))
    throw std::runtime_error("xfield: truncated bitset");
  for (std::size_t i = 0; i < cells; ++i) {
    const Vertex v = xf.box().at(i / static_cast<std::size_t>(xf.intervals()));
    const int k = static_cast<int>(i % static_cast<std::size_t>(xf.intervals()));
    for (Mark m : kMarks) {
      const std::size_t bit = i * kMarkCount + static_cast<std::size_t>(mark_index(m));
      if ((packed[bit / 8] >> (bit % 8)) & 1u) xf.set(v, k, m, true);
    }
  }
  return xf;
}

nlohmann::json to_json(const Certificate& c) {
  nlohmann::json j;
  j["target"] = {c.target.x, c.target.y};
  j["n"] = c.n;
  j["verdict"] = c.verdict;
  j["floor_interval"] = c.floor_interval;
  j["witness"] = nlohmann::json::array();
  for (const auto& s : c.witness) {
    j["witness"].push_back({{"kind", s.kind == WitnessStep::Kind::dwell ? "dwell" : "jump"},
                            {"interval", s.interval},
                            {"from", {s.from.x, s.from.y}},
                            {"to", {s.to.x, s.to.y}}});
  }
  return j;
}

}  // namespace cplab
