#include "cplab/cylinder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cplab/parallel.hpp"
#include "cplab/rng.hpp"

namespace cplab {

namespace {

double xfield_depth(int n, double delta) { return (floor_interval_index(n, delta) + 2) * delta; }

void check_scale(int n, double delta) {
  if (n < 1) throw std::invalid_argument("scale n must be positive");
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
}

}  // namespace

SpaceTimeBox cylinder_xregion(int n, double delta) {
  check_scale(n, delta);
  const int r = floor_sqrt(n);
  return {{0, n - r, 6 * n - 1, 2 * n + r}, xfield_depth(n, delta), true};
}

SpaceTimeBox cylinder_full_xregion(int n, double delta) {
  check_scale(n, delta);
  return {{0, 0, 6 * n - 1, 3 * n}, xfield_depth(n, delta), true};
}

XField sample_xfield(const SpaceTimeBox& region, double delta, const RateParams& params,
                     std::uint64_t seed) {
  XField xf(region, delta, params, seed);
  std::vector<double> p_arrow(static_cast<std::size_t>(xf.intervals()));
  std::vector<double> p_star(p_arrow.size());
  for (int k = 0; k < xf.intervals(); ++k) {
    const double len = xf.interval_length(k);
    p_arrow[static_cast<std::size_t>(k)] = -std::expm1(-params.arrow_rate() * len);
    p_star[static_cast<std::size_t>(k)] = -std::expm1(-params.star_rate() * len);
  }
  for (std::size_t i = 0; i < region.box.count(); ++i) {
    const Vertex v = region.box.at(i);
    CounterRng rng(vertex_key(seed, v.x, v.y));
    for (int k = 0; k < xf.intervals(); ++k)
      for (Mark m : kMarks) {
        const double p = is_arrow(m) ? p_arrow[static_cast<std::size_t>(k)] : p_star[static_cast<std::size_t>(k)];
        if (rng.uniform() < p) xf.set(v, k, m, true);
      }
  }
  return xf;
}

OccupancyField certified_field(const XField& xf, const Rect& targets, int n, GuardRule rule) {
  const bool cyl = xf.region().cylinder && targets.x0 == xf.box().x0 && targets.x1 == xf.box().x1;
  Provenance prov{FieldKind::eta_n_delta, n, xf.params(), xf.delta(), xf.seed()};
  OccupancyField f(targets, prov, cyl);
  for (std::size_t i = 0; i < targets.count(); ++i) {
    const Vertex v = targets.at(i);
    f.set(v, certified_occupancy(xf, v, n, rule).verdict);
  }
  return f;
}

CylinderEvent certified_cylinder_event(const XField& xf, int n, GuardRule rule) {
  const Rect rows{0, n, 6 * n - 1, 2 * n};
  return cylinder_event(certified_field(xf, rows, n, rule), n);
}

std::size_t xvar_index(const XField& xf, Vertex v, int k, Mark m) {
  if (!xf.contains(v, k)) throw std::out_of_range("xvar_index: variable outside the field");
  const Vertex c = xf.region().canonical(v);
  return (xf.box().index(c) * static_cast<std::size_t>(xf.intervals()) + static_cast<std::size_t>(k)) *
             kMarkCount +
         static_cast<std::size_t>(mark_index(m));
}

std::string to_string(const ClassKey& key) {
  return std::string(mark_name(key.mark)) + ",k=" + std::to_string(key.k) + ",l=" +
         std::to_string(key.row);
}

std::vector<SymmetryClass> symmetry_classes(const GeometryPlan& g, double delta) {
  const SpaceTimeBox region = cylinder_full_xregion(g.n, delta);
  const XField shape(region, delta, RateParams::from_q(0.5), 0);
  std::vector<SymmetryClass> out;
  for (Mark m : kMarks)
    for (int k = 0; k < shape.intervals(); ++k)
      for (int row = region.box.y0; row <= region.box.y1; ++row) {
        SymmetryClass c{{m, k, row}, {}};
        for (int x = region.box.x0; x <= region.box.x1; ++x) c.columns.push_back(x);
        out.push_back(std::move(c));
      }
  return out;
}

namespace {

// Certified field on rows [n, 2n] plus incremental re-evaluation after a
// single variable flip.
class CylinderState {
 public:
  CylinderState(XField xf, int n, GuardRule rule)
      : xf_(std::move(xf)), n_(n), r_(floor_sqrt(n)), rule_(rule),
        field_(certified_field(xf_, {0, n, 6 * n - 1, 2 * n}, n, rule)),
        value_(cylinder_event(field_, n).value) {}

  bool value() const { return value_; }
  const XField& xfield() const { return xf_; }

  // Event value with bit (v, k, m) forced to `bit`; the state is restored.
  bool with_bit(Vertex v, int k, Mark m, bool bit) {
    const bool old = xf_.bit(v, k, m);
    if (old == bit) return value_;
    xf_.set(v, k, m, bit);
    changed_.clear();
    for (int y = std::max(v.y - r_, n_); y <= std::min(v.y + r_, 2 * n_); ++y)
      for (int dx = -r_; dx <= r_; ++dx) {
        const Vertex x{v.x + dx, y};
        const bool now = certified_occupancy(xf_, x, n_, rule_).verdict;
        if (now != field_(x)) changed_.push_back(x);
      }
    bool result = value_;
    if (!changed_.empty()) {
      for (Vertex x : changed_) field_.set(x, !field_(x));
      result = cylinder_event(field_, n_).value;
      for (Vertex x : changed_) field_.set(x, !field_(x));
    }
    xf_.set(v, k, m, old);
    return result;
  }

 private:
  XField xf_;
  int n_;
  int r_;
  GuardRule rule_;
  OccupancyField field_;
  bool value_;
  std::vector<Vertex> changed_;
};

}  // namespace

CylinderInfluence influence_mc(const GeometryPlan& g, const RateParams& params, double delta,
                               std::size_t replicas, std::uint64_t seed,
                               const InfluenceOptions& options) {
  if (replicas < 1000) throw std::invalid_argument("influence_mc needs at least 1000 replicas");
  const int n = g.n;
  const SpaceTimeBox region = cylinder_full_xregion(n, delta);
  std::vector<SymmetryClass> classes = symmetry_classes(g, delta);
  if (!options.only.empty()) {
    std::vector<SymmetryClass> kept;
    for (const ClassKey& key : options.only) {
      auto it = std::find_if(classes.begin(), classes.end(),
                             [&](const SymmetryClass& c) { return c.key == key; });
      if (it == classes.end()) throw std::invalid_argument("unknown class " + to_string(key));
      kept.push_back(*it);
    }
    classes = std::move(kept);
  }
  const std::size_t nc = classes.size();
  const std::size_t width = static_cast<std::size_t>(region.box.width());
  const std::size_t slots = options.per_member ? nc * width : nc;

  std::vector<std::uint8_t> pivots(replicas * slots, 0);
  std::vector<std::uint8_t> values(replicas, 0);
  std::vector<double> totals(replicas, 0.0);
  parallel_for(replicas, options.threads, [&](std::size_t i) {
    const std::uint64_t key = derive_key(seed, i);
    CylinderState state(sample_xfield(region, delta, params, derive_key(key, 0)), n, options.rule);
    values[i] = state.value() ? 1 : 0;
    CounterRng pick(derive_key(key, 1));
    double total = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
      const ClassKey& ck = classes[c].key;
      auto pivotal = [&](int column) {
        const Vertex v{column, ck.row};
        return state.with_bit(v, ck.k, ck.mark, false) != state.with_bit(v, ck.k, ck.mark, true);
      };
      if (options.per_member) {
        for (std::size_t j = 0; j < width; ++j) {
          const bool p = pivotal(classes[c].columns[j]);
          pivots[i * slots + c * width + j] = p;
          total += p;
        }
      } else {
        const int j = pick.below(static_cast<int>(width));
        const bool p = pivotal(classes[c].columns[static_cast<std::size_t>(j)]);
        pivots[i * slots + c] = p;
        total += p ? static_cast<double>(width) : 0.0;
      }
    }
    totals[i] = total;
  });

  CylinderInfluence out;
  out.replicas = replicas;
  InfluenceReport& rep = out.report;
  const auto hits = static_cast<std::size_t>(std::count(values.begin(), values.end(), 1));
  const BinomialEstimate pa = binomial_estimate(hits, replicas, options.level);
  rep.probability = pa.estimate;
  rep.probability_se = pa.stderr_;
  const MeanEstimate sum = mean_estimate(totals);
  rep.sum_influences = sum.mean;
  rep.sum_influences_se = sum.stderr_;
  for (std::size_t c = 0; c < nc; ++c) {
    ClassInfluence ci;
    ci.key = to_string(classes[c].key);
    ci.members = width;
    out.keys.push_back(classes[c].key);
    if (options.per_member) {
      std::vector<MemberInfluence> members;
      std::vector<double> per_replica(replicas, 0.0);
      for (std::size_t j = 0; j < width; ++j) {
        std::size_t h = 0;
        for (std::size_t i = 0; i < replicas; ++i) {
          const std::uint8_t p = pivots[i * slots + c * width + j];
          h += p;
          per_replica[i] += p / static_cast<double>(width);
        }
        members.push_back({classes[c].columns[j], binomial_estimate(h, replicas, options.level)});
      }
      const MeanEstimate m = mean_estimate(per_replica);
      ci.influence = m.mean;
      ci.stderr_ = m.stderr_;
      out.members.push_back(std::move(members));
    } else {
      std::size_t h = 0;
      for (std::size_t i = 0; i < replicas; ++i) h += pivots[i * slots + c];
      const BinomialEstimate b = binomial_estimate(h, replicas, options.level);
      ci.influence = b.estimate;
      ci.stderr_ = b.stderr_;
    }
    ci.total = ci.influence * static_cast<double>(width);
    rep.classes.push_back(std::move(ci));
  }
  rep.max_influence = 0.0;
  for (const auto& c : rep.classes) rep.max_influence = std::max(rep.max_influence, c.influence);
  rep.m = 0;
  for (const auto& c : rep.classes)
    if (c.influence == rep.max_influence) rep.m += c.members;
  rep.m = std::max<std::size_t>(rep.m, 1);
  return out;
}

LevelCrossing level_crossing(const std::vector<double>& q, const std::vector<double>& p,
                             double level) {
  LevelCrossing c;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < level) continue;
    c.reached = true;
    if (i == 0) {
      c.censored = true;
      c.q = q[0];
    } else {
      const double t = (level - p[i - 1]) / (p[i] - p[i - 1]);
      c.q = q[i - 1] + t * (q[i] - q[i - 1]);
    }
    return c;
  }
  return c;
}

ThresholdWindow threshold_window(const GeometryPlan& g, double delta, const EventSpec& event,
                                 const std::vector<double>& q_grid, std::size_t replicas,
                                 std::uint64_t seed, double eps, double level, int threads) {
  if (q_grid.size() < 5) throw std::invalid_argument("threshold_window needs at least 5 grid values");
  if (!std::is_sorted(q_grid.begin(), q_grid.end()) ||
      std::adjacent_find(q_grid.begin(), q_grid.end()) != q_grid.end())
    throw std::invalid_argument("q grid must be strictly increasing");
  if (!(eps > 0.0 && eps < 0.5)) throw std::invalid_argument("eps must lie in (0, 1/2)");
  if (replicas < 30) throw std::invalid_argument("at least 30 replicas required");
  const int n = g.n;
  ThresholdWindow w;
  w.n = n;
  w.delta = delta;
  w.eps = eps;
  w.diff_bound_ratio = std::log(static_cast<double>(n)) / std::log(2.0 / delta);
  const SpaceTimeBox region = cylinder_xregion(n, delta);
  // Replica i shares its seed across the grid, so indicator bits are
  // monotonically coupled in q.
  std::vector<std::uint8_t> hits(q_grid.size() * replicas, 0);
  parallel_for(q_grid.size() * replicas, threads, [&](std::size_t j) {
    const std::size_t gi = j / replicas;
    const std::size_t i = j % replicas;
    const RateParams p = RateParams::from_q(q_grid[gi]);
    const std::uint64_t key = derive_key(seed, i);
    bool v;
    if (event.kind == EventKind::cylinder)
      v = certified_cylinder_event(sample_xfield(region, delta, p, key), n).value;
    else
      v = evaluate_event(event, g, p, key);
    hits[j] = v ? 1 : 0;
  });
  std::vector<double> est, lo, hi;
  for (std::size_t gi = 0; gi < q_grid.size(); ++gi) {
    std::size_t h = 0;
    for (std::size_t i = 0; i < replicas; ++i) h += hits[gi * replicas + i];
    const BinomialEstimate b = binomial_estimate(h, replicas, level);
    w.points.push_back({q_grid[gi], b});
    est.push_back(b.estimate);
    lo.push_back(b.lo);
    hi.push_back(b.hi);
  }
  w.monotone_ok = true;
  for (std::size_t gi = 1; gi < est.size(); ++gi)
    if (est[gi] + 3.0 * std::hypot(w.points[gi].estimate.stderr_, w.points[gi - 1].estimate.stderr_) <
        est[gi - 1])
      w.monotone_ok = false;

  const double inf = std::numeric_limits<double>::infinity();
  w.low = level_crossing(q_grid, est, eps);
  w.high = level_crossing(q_grid, est, 1.0 - eps);
  w.width = w.low.reached && w.high.reached ? w.high.q - w.low.q : inf;
  // The upper band reaches each level first, the lower band last.
  const LevelCrossing low_early = level_crossing(q_grid, hi, eps);
  const LevelCrossing low_late = level_crossing(q_grid, lo, eps);
  const LevelCrossing high_early = level_crossing(q_grid, hi, 1.0 - eps);
  const LevelCrossing high_late = level_crossing(q_grid, lo, 1.0 - eps);
  w.width_lo = low_late.reached && high_early.reached ? std::max(0.0, high_early.q - low_late.q) : 0.0;
  w.width_hi = low_early.reached && high_late.reached ? high_late.q - low_early.q : inf;
  return w;
}

bool windows_non_increasing(const std::vector<ThresholdWindow>& ws) {
  for (std::size_t i = 1; i < ws.size(); ++i)
    if (ws[i].width_lo > ws[i - 1].width_hi) return false;
  return true;
}

}  // namespace cplab
