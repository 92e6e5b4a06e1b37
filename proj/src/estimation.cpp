#include "cplab/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

#include "cplab/parallel.hpp"
#include "cplab/rng.hpp"

namespace cplab {

EventSpec horizontal_3n_n(int n) {
  return {EventKind::crossing, {{n, n, 4 * n, 2 * n}, Direction::horizontal, Wrap::none}};
}

EventSpec vertical_3n_n(int n) {
  return {EventKind::crossing, {{n, n, 4 * n, 2 * n}, Direction::vertical, Wrap::none}};
}

bool evaluate_event(const EventSpec& event, const GeometryPlan& g, const RateParams& params,
                    std::uint64_t seed) {
  switch (event.kind) {
    case EventKind::always_true: return true;
    case EventKind::always_false: return false;
    case EventKind::crossing: {
      const Rect& r = event.crossing.rect;
      const Diagram d = sample_region(occupancy_region(r, g.n), params, seed);
      return has_crossing(occupancy_from_diagram(d, r, g.n), event.crossing);
    }
    case EventKind::cylinder: {
      const Diagram d = sample_region(cylinder_event_region(g.n), params, seed);
      const Rect rows{0, g.n, 6 * g.n - 1, 2 * g.n};
      return cylinder_event(occupancy_from_diagram(d, rows, g.n), g.n).value;
    }
  }
  return false;
}

EventEstimate estimate_event_probability(const EventSpec& event, const GeometryPlan& g,
                                         const RateParams& params, std::size_t replicas,
                                         std::uint64_t seed, double level, int threads) {
  if (replicas < 30) throw std::invalid_argument("at least 30 replicas required");
  EventEstimate out;
  out.outcomes.assign(replicas, 0);
  parallel_for(replicas, threads, [&](std::size_t i) {
    out.outcomes[i] = evaluate_event(event, g, params, derive_key(seed, i)) ? 1 : 0;
  });
  const auto hits = static_cast<std::size_t>(std::count(out.outcomes.begin(), out.outcomes.end(), 1));
  out.estimate = binomial_estimate(hits, replicas, level);
  return out;
}

namespace {

Rect bounding(const std::vector<Rect>& rs) {
  Rect b = rs.front();
  for (const Rect& r : rs) {
    b.x0 = std::min(b.x0, r.x0);
    b.y0 = std::min(b.y0, r.y0);
    b.x1 = std::max(b.x1, r.x1);
    b.y1 = std::max(b.y1, r.y1);
  }
  return b;
}

// Product of marginal estimates with a delta-method standard error.
std::pair<double, double> product_with_se(const std::vector<BinomialEstimate>& ms) {
  double prod = 1.0;
  for (const auto& m : ms) prod *= m.estimate;
  double var = 0.0;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    double others = 1.0;
    for (std::size_t j = 0; j < ms.size(); ++j)
      if (j != i) others *= ms[j].estimate;
    var += others * others * ms[i].stderr_ * ms[i].stderr_;
  }
  return {prod, std::sqrt(var)};
}

bool dominated(const OccupancyField& upper, const OccupancyField& lower) {
  for (std::size_t i = 0; i < lower.bits().size(); ++i)
    if (lower.bits()[i] > upper.bits()[i]) return false;
  return true;
}

}  // namespace

MixingReport mixing_check(const GeometryPlan& g, const RateParams& params,
                          const std::vector<CrossingSpec>& events, std::size_t replicas,
                          std::uint64_t seed, int deep_scale, double level, int threads) {
  if (events.empty()) throw std::invalid_argument("mixing check needs at least one event");
  if (replicas < 30) throw std::invalid_argument("at least 30 replicas required");
  const int n = g.n;
  const int m = deep_scale == 0 ? 4 * n : deep_scale;
  if (m < n) throw std::invalid_argument("deep scale must be >= n");
  const int r = floor_sqrt(n);
  std::vector<Rect> rects;
  for (const auto& e : events) {
    if (e.wrap != Wrap::none) throw std::invalid_argument("mixing events must not wrap");
    rects.push_back(e.rect);
  }
  for (std::size_t i = 0; i < rects.size(); ++i)
    for (std::size_t j = i + 1; j < rects.size(); ++j)
      if (linf_distance(rects[i], rects[j]) <= 2 * r)
        throw std::invalid_argument("rectangles closer than 2 floor(sqrt n)");

  MixingReport rep;
  rep.k = rects.size();
  rep.replicas = replicas;
  rep.n = n;
  rep.deep_scale = m;
  rep.footprints_disjoint = true;
  for (std::size_t i = 0; i < rects.size(); ++i)
    for (std::size_t j = i + 1; j < rects.size(); ++j)
      if (linf_distance(rects[i].grown(r), rects[j].grown(r)) == 0) rep.footprints_disjoint = false;

  const std::size_t k = rects.size();
  // per replica: bit i = truncated event i, bit k + i = deep event i
  std::vector<std::uint32_t> outcome(replicas, 0);
  std::vector<std::uint8_t> mismatch(replicas, 0);
  std::vector<std::uint8_t> nesting(replicas, 0);
  const SpaceTimeBox region{bounding(rects).grown(floor_sqrt(m)), std::sqrt(static_cast<double>(m)),
                            false};
  parallel_for(replicas, threads, [&](std::size_t rep_i) {
    const Diagram d = sample_region(region, params, derive_key(seed, rep_i));
    std::uint32_t bits = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const OccupancyField fn = occupancy_from_diagram(d, rects[i], n);
      const OccupancyField fm = occupancy_from_diagram(d, rects[i], m);
      const Diagram local = restrict_diagram(d, occupancy_region(rects[i], n));
      if (!(occupancy_from_diagram(local, rects[i], n) == fn)) mismatch[rep_i] = 1;
      if (!dominated(fn, fm)) nesting[rep_i] = 1;
      if (has_crossing(fn, events[i])) bits |= 1u << i;
      if (has_crossing(fm, events[i])) bits |= 1u << (k + i);
    }
    outcome[rep_i] = bits;
  });

  const std::uint32_t all_trunc = (1u << k) - 1;
  const std::uint32_t all_deep = all_trunc << k;
  std::size_t joint_t = 0;
  std::size_t joint_s = 0;
  std::vector<std::size_t> marg_t(k, 0);
  std::vector<std::size_t> marg_s(k, 0);
  for (std::uint32_t b : outcome) {
    if ((b & all_trunc) == all_trunc) ++joint_t;
    if ((b & all_deep) == all_deep) ++joint_s;
    for (std::size_t i = 0; i < k; ++i) {
      if (b & (1u << i)) ++marg_t[i];
      if (b & (1u << (k + i))) ++marg_s[i];
    }
  }
  rep.joint_truncated = binomial_estimate(joint_t, replicas, level);
  rep.joint_stationary = binomial_estimate(joint_s, replicas, level);
  for (std::size_t i = 0; i < k; ++i) {
    rep.marginal_truncated.push_back(binomial_estimate(marg_t[i], replicas, level));
    rep.marginal_stationary.push_back(binomial_estimate(marg_s[i], replicas, level));
  }
  std::tie(rep.product_truncated, rep.product_truncated_se) = product_with_se(rep.marginal_truncated);
  std::tie(rep.product_stationary, rep.product_stationary_se) =
      product_with_se(rep.marginal_stationary);
  const double se_s = std::hypot(rep.joint_stationary.stderr_, rep.product_stationary_se);
  rep.positive_association_ok = rep.product_stationary <= rep.joint_stationary.estimate + 3.0 * se_s;
  const double se_t = std::hypot(rep.joint_truncated.stderr_, rep.product_truncated_se);
  const double diff = std::abs(rep.joint_truncated.estimate - rep.product_truncated);
  rep.truncated_factorization_z = se_t > 0.0 ? diff / se_t : (diff == 0.0 ? 0.0 : INFINITY);
  rep.factorization_mismatches =
      static_cast<std::size_t>(std::count(mismatch.begin(), mismatch.end(), 1));
  rep.nesting_violations = static_cast<std::size_t>(std::count(nesting.begin(), nesting.end(), 1));
  return rep;
}

std::string to_string(FiniteSizeBranch b) {
  switch (b) {
    case FiniteSizeBranch::a: return "a";
    case FiniteSizeBranch::b: return "b";
    case FiniteSizeBranch::neither: return "neither";
  }
  return "?";
}

FiniteSizeReport finite_size_report(const GeometryPlan& g, const RateParams& params,
                                    double eps_hat, std::size_t replicas, std::uint64_t seed,
                                    double level, int threads) {
  if (!(eps_hat > 0.0 && eps_hat < 0.5)) throw std::invalid_argument("eps_hat must be in (0, 1/2)");
  if (replicas < 30) throw std::invalid_argument("at least 30 replicas required");
  const EventSpec h = horizontal_3n_n(g.n);
  const EventSpec v = vertical_3n_n(g.n);
  const Rect& rect = h.crossing.rect;
  std::vector<std::uint8_t> hv(replicas, 0);
  std::vector<std::uint8_t> vv(replicas, 0);
  parallel_for(replicas, threads, [&](std::size_t i) {
    const Diagram d = sample_region(occupancy_region(rect, g.n), params, derive_key(seed, i));
    const OccupancyField f = occupancy_from_diagram(d, rect, g.n);
    hv[i] = has_crossing(f, h.crossing) ? 1 : 0;
    vv[i] = has_crossing(f, v.crossing) ? 1 : 0;
  });
  FiniteSizeReport rep;
  rep.eps_hat = eps_hat;
  rep.horizontal =
      binomial_estimate(static_cast<std::size_t>(std::count(hv.begin(), hv.end(), 1)), replicas, level);
  rep.vertical =
      binomial_estimate(static_cast<std::size_t>(std::count(vv.begin(), vv.end(), 1)), replicas, level);
  if (rep.vertical.estimate < eps_hat)
    rep.branch = FiniteSizeBranch::a;
  else if (rep.horizontal.estimate > 1.0 - eps_hat)
    rep.branch = FiniteSizeBranch::b;
  return rep;
}

}  // namespace cplab
