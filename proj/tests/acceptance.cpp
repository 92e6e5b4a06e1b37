// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 when any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include <boost/math/distributions/beta.hpp>

#include "CLI11.hpp"

#include "cplab/coupling.hpp"
#include "cplab/cylinder.hpp"
#include "cplab/discretization.hpp"
#include "cplab/estimation.hpp"
#include "cplab/influence.hpp"
#include "cplab/occupancy.hpp"
#include "cplab/percolation.hpp"
#include "cplab/reachability.hpp"
#include "cplab/rng.hpp"
#include "cplab/stats.hpp"
#include "cplab/tail_fit.hpp"
#include "oracles.hpp"

using namespace cplab;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1 ------------------------------------------------------------------------

Verdict reachability_oracle() {
  std::size_t total = 0, agree = 0, ones = 0;
  for (double q : {0.3, 0.6, 0.9})
    for (std::uint64_t s = 0; s < 400; ++s) {
      const Diagram d = sample_region({{0, 0, 4, 4}, 4.0, false}, RateParams::from_q(q), derive_key(1, s));
      const bool got = reachable(d, {{2, 2}, 2, 4.0});
      agree += got == oracle::forward_reach(d, {2, 2}, 2, 4.0);
      ones += got;
      ++total;
    }
  return {agree == total && ones > 0 && ones < total,
          fmt("%zu/%zu diagrams agree (q = 0.3, 0.6, 0.9; %zu reachable)", agree, total, ones)};
}

// 2 ------------------------------------------------------------------------

MonotoneEvent random_upset(int n, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<Assignment> terms;
  const int count = 2 + static_cast<int>(rng.below(5));
  for (int t = 0; t < count; ++t) {
    Assignment m = 0;
    for (int i = 0; i < n; ++i)
      if (rng.uniform() < 0.3) m |= Assignment{1} << i;
    if (!m) m = Assignment{1} << rng.below(static_cast<std::uint64_t>(n));
    terms.push_back(m);
  }
  return {[terms](Assignment a) {
            for (Assignment m : terms)
              if ((a & m) == m) return true;
            return false;
          },
          true};
}

Verdict russo_exactness() {
  double worst = 0.0;
  int instances = 0;
  for (std::uint64_t s = 0; s < 60; ++s) {
    CounterRng rng(derive_key(2, s));
    const int n = 8 + static_cast<int>(rng.below(9));
    const MonotoneEvent e = random_upset(n, derive_key(3, s));
    ProductSpace sp;
    if (s % 2 == 0) {
      sp = ProductSpace::uniform(n, 0.1 + 0.8 * rng.uniform());
    } else {
      std::vector<int> first;
      for (int i = 0; i < n; ++i)
        if (rng.uniform() < 0.5) first.push_back(i);
      sp = ProductSpace::two_class(n, first, 0.1 + 0.8 * rng.uniform(), 0.1 + 0.8 * rng.uniform());
    }
    for (int c = 0; c < static_cast<int>(sp.p_of_class.size()); ++c)
      worst = std::max(worst, russo_derivative_check(sp, e, c, 1e-5));
    ++instances;
  }
  return {worst <= 1e-6, fmt("%d instances (8-16 vars, one and two classes), max residual %.2e", instances, worst)};
}

// 3 ------------------------------------------------------------------------

SpaceTimeBox hull(const SpaceTimeBox& a, const SpaceTimeBox& b) {
  return {{std::min(a.box.x0, b.box.x0), std::min(a.box.y0, b.box.y0), std::max(a.box.x1, b.box.x1),
           std::max(a.box.y1, b.box.y1)},
          std::max(a.depth, b.depth),
          false};
}

Verdict truncation_nesting() {
  const Rect targets{20, 20, 22, 22};
  const std::vector<int> scales = {4, 9, 16};
  const int cert_n = 9;
  const double delta = delta_for_scale(cert_n, kDefaultAlpha);
  SpaceTimeBox region = occupancy_region(targets, 16);
  for (std::size_t i = 0; i < targets.count(); ++i) region = hull(region, sandwich_region(targets.at(i), cert_n, delta));
  std::size_t nest = 0, dom = 0, certified = 0, bits = 0;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const Diagram d = sample_region(region, RateParams::from_q(0.85), derive_key(4, s));
    std::vector<OccupancyField> f;
    for (int n : scales) f.push_back(occupancy_from_diagram(d, targets, n));
    const XField xf = discretize(d, delta);
    for (std::size_t i = 0; i < targets.count(); ++i) {
      for (std::size_t k = 1; k < f.size(); ++k) nest += f[k].bits()[i] > f[k - 1].bits()[i];
      const bool c = certified_occupancy(xf, targets.at(i), cert_n).verdict;
      certified += c;
      dom += c && !f[1].bits()[i];
      ++bits;
    }
  }
  return {nest == 0 && dom == 0 && certified > 0,
          fmt("10000 diagrams, %zu target bits: %zu nesting and %zu domination violations (%zu certified)", bits,
              nest, dom, certified)};
}

// 4 ------------------------------------------------------------------------

Verdict certificate_soundness() {
  const int n = 16;
  const double delta = delta_for_scale(n, kDefaultAlpha);
  const Vertex x{10, 10};
  const SpaceTimeBox region = sandwich_region(x, n, delta);
  const BoundarySpec b = BoundarySpec::for_scale(x, n);
  std::size_t verdicts = 0, violations = 0, checks = 0;
  for (std::uint64_t s = 0; verdicts < 100 && s < 100000; ++s) {
    const XField xf = discretize(sample_region(region, RateParams::from_q(0.9), derive_key(5, s)), delta);
    if (!certified_occupancy(xf, x, n).verdict) continue;
    ++verdicts;
    for (std::uint64_t t = 0; t < 1000; ++t) {
      violations += !reachable(resample_consistent(xf, derive_key(6, s, t)), b);
      ++checks;
    }
  }
  return {verdicts == 100 && violations == 0,
          fmt("%zu certified verdicts, %zu resamples, %zu unreachable", verdicts, checks, violations)};
}

// 5 ------------------------------------------------------------------------

Verdict independence_at_distance() {
  const int n = 9;
  const int r = floor_sqrt(n);
  const Rect a{0, 0, 3, 3};
  const Rect b{a.x1 + 2 * r + 1, 0, a.x1 + 2 * r + 4, 3};
  const SpaceTimeBox region = occupancy_region({a.x0, a.y0, b.x1, b.y1}, n);
  std::vector<double> xa, xb;
  std::size_t reads = 0, outside = 0;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const Diagram d = sample_region(region, RateParams::from_q(0.8), derive_key(7, s));
    for (const Rect* box : {&a, &b}) {
      double occ = 0;
      for (std::size_t i = 0; i < box->count(); ++i) {
        const BoundarySpec bs = BoundarySpec::for_scale(box->at(i), n);
        ReadTracker t(dependency_footprint(bs));
        occ += reachable(d, bs, &t);
        reads += t.reads();
        outside += t.violations();
      }
      (box == &a ? xa : xb).push_back(occ);
    }
  }
  const Correlation c = correlation(xa, xb);
  return {std::abs(c.r) <= 3.0 * c.stderr_ && outside == 0 && reads > 0,
          fmt("10000 replicas, distance %d > 2 floor(sqrt n) = %d: r = %.4f (3 SE = %.4f), %zu of %zu reads "
              "outside the footprint",
              b.x0 - a.x1, 2 * r, c.r, 3.0 * c.stderr_, outside, reads)};
}

// 6 ------------------------------------------------------------------------

Verdict coupling_fidelity() {
  std::vector<std::string> failed;
  auto check = [&](const std::string& name, double p) {
    if (!(p > 0.01)) failed.push_back(fmt("%s p=%.4f", name.c_str(), p));
  };

  // Single 3-particle cluster with cross-overs active.
  const double q = 0.05, qp = 0.95;
  CouplingParams p;
  p.q = q;
  p.q_prime = qp;
  p.delta = 0.05;
  p.delta1 = 1.0;
  p.n = 16;
  p.beta_prime = 3.5 / std::log(16.0);
  IntervalCluster c;
  c.intervals = {{{0, 0}, 0}};
  c.counts = {3};
  c.order = {0, 0, 0};
  std::vector<double> pat1(8, 0.0), pat2(8, 0.0);
  std::array<std::vector<double>, 3> t1, t2;
  std::size_t crossed = 0;
  for (std::uint64_t s = 0; s < 100000; ++s) {
    const CoupledCluster cc = couple_cluster(c, p, derive_key(8, s));
    int a = 0, b = 0;
    for (std::size_t j = 0; j < 3; ++j) {
      a |= is_arrow(cc.copy1[j]) << j;
      b |= is_arrow(cc.copy2[j]) << j;
      t1[j].push_back(cc.times1[j] + 1.0);
      t2[j].push_back(cc.times2[j] + 1.0);
    }
    pat1[static_cast<std::size_t>(a)] += 1;
    pat2[static_cast<std::size_t>(b)] += 1;
    crossed += cc.crossover != Crossover::none;
  }
  auto probs = [](double pr) {
    std::vector<double> out(8);
    for (int m = 0; m < 8; ++m) {
      double v = 1.0;
      for (int j = 0; j < 3; ++j) v *= (m >> j & 1) ? pr : 1.0 - pr;
      out[static_cast<std::size_t>(m)] = v;
    }
    return out;
  };
  check("cluster copy1 marks", chi_square_gof(pat1, probs(q)).p_value);
  check("cluster copy2 marks", chi_square_gof(pat2, probs(qp)).p_value);
  for (std::size_t j = 0; j < 3; ++j) {
    const boost::math::beta_distribution<double> law(static_cast<double>(j + 1), static_cast<double>(3 - j));
    auto cdf = [&](double x) { return boost::math::cdf(law, std::clamp(x, 0.0, 1.0)); };
    check(fmt("cluster copy1 time %zu", j), ks_one_sample(t1[j], cdf).p_value);
    check(fmt("cluster copy2 time %zu", j), ks_one_sample(t2[j], cdf).p_value);
  }

  // Full diagrams at n = 16 with the default scales.
  const int n = 16;
  const GeometryPlan g = make_geometry(n);
  CouplingParams fp;
  fp.q = 0.7;
  fp.q_prime = 0.95;
  fp.delta = delta_for_scale(n, kDefaultAlpha);
  fp.delta1 = delta1_for_scale(n, kDefaultAlpha);
  fp.n = n;
  fp.beta_prime = default_beta_prime(fp.q, fp.q_prime, n, kDefaultAlpha);
  const IntervalGrid grid = IntervalGrid::for_targets(g.box_L, n, fp.delta, fp.delta1);
  const Vertex probe{(grid.box.x0 + grid.box.x1) / 2, (grid.box.y0 + grid.box.y1) / 2};
  std::array<std::vector<double>, 2> marks_c = {std::vector<double>(5), std::vector<double>(5)};
  std::array<std::vector<double>, 2> marks_d = marks_c;
  std::array<std::vector<double>, 2> times_c, times_d;
  std::size_t points = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const CoupledDiagrams cd = couple_diagrams(grid, fp, derive_key(9, s));
    for (int k = 0; k < 2; ++k) {
      const Diagram& d = k ? cd.copy2 : cd.copy1;
      const Diagram direct = sample_region(grid.region(), RateParams::from_q(k ? fp.q_prime : fp.q), derive_key(10, s, k));
      for (std::size_t i = 0; i < grid.box.count(); ++i) {
        for (const auto& pt : d.points(grid.box.at(i))) marks_c[k][static_cast<std::size_t>(mark_index(pt.mark))] += 1;
        for (const auto& pt : direct.points(grid.box.at(i))) marks_d[k][static_cast<std::size_t>(mark_index(pt.mark))] += 1;
      }
      for (const auto& pt : d.points(probe)) times_c[k].push_back(pt.time);
      for (const auto& pt : direct.points(probe)) times_d[k].push_back(pt.time);
      points += d.total_points();
    }
  }
  for (int k = 0; k < 2; ++k) {
    check(fmt("diagram copy%d marks", k + 1), chi_square_two_sample(marks_c[k], marks_d[k]).p_value);
    check(fmt("diagram copy%d times", k + 1), ks_two_sample(times_c[k], times_d[k]).p_value);
  }
  std::string detail = fmt("10^5 cluster couplings (%zu cross-overs), 1000 diagram pairs at n=16 (%zu points): ",
                           crossed, points);
  detail += failed.empty() ? "12 tests p > 0.01" : "failed:";
  for (const auto& f : failed) detail += " [" + f + "]";
  return {failed.empty(), detail};
}

// 7 ------------------------------------------------------------------------

Verdict stability_audit() {
  const double q = 0.7, qp = 0.95;
  struct Row {
    int n;
    double rate, lo, hi, pair_freq;
    std::size_t failures, unexplained, occupied, crossed;
    int cap;
  };
  std::vector<Row> rows;
  const double z = normal_quantile_two_sided(0.95);
  for (int n : {8, 16, 32}) {
    const GeometryPlan g = make_geometry(n);
    CouplingParams p;
    p.q = q;
    p.q_prime = qp;
    p.delta = delta_for_scale(n, kDefaultAlpha);
    p.delta1 = delta1_for_scale(n, kDefaultAlpha);
    p.n = n;
    p.beta_prime = default_beta_prime(q, qp, n, kDefaultAlpha);
    const IntervalGrid grid = IntervalGrid::for_targets(g.box_L, n, p.delta, p.delta1);
    std::vector<double> f, o;
    Row row{n, 0, 0, 0, 0, 0, 0, 0, 0, p.size_cap()};
    std::size_t with_failure = 0;
    for (std::uint64_t s = 0; s < 1000; ++s) {
      const CoupledDiagrams cd = couple_diagrams(grid, p, derive_key(11, static_cast<std::uint64_t>(n), s));
      const StabilityAudit a = verify_stability(cd, g.box_L, n, p.delta);
      f.push_back(static_cast<double>(a.failures.size()));
      o.push_back(static_cast<double>(a.occupied_copy1));
      row.failures += a.failures.size();
      row.unexplained += a.unexplained();
      row.occupied += a.occupied_copy1;
      with_failure += !a.failures.empty();
      for (const auto& fl : cd.flags) row.crossed += fl.crossed_over;
    }
    // Ratio estimator with the pair as the sampling unit.
    row.rate = static_cast<double>(row.failures) / static_cast<double>(row.occupied);
    const double mo = static_cast<double>(row.occupied) / 1000.0;
    double ss = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) ss += std::pow(f[i] - row.rate * o[i], 2);
    const double se = std::sqrt(ss / (1000.0 * 999.0)) / mo;
    row.lo = row.rate - z * se;
    row.hi = row.rate + z * se;
    row.pair_freq = static_cast<double>(with_failure) / 1000.0;
    rows.push_back(row);
  }
  bool implication = true, trend = true;
  std::string detail = "q=0.7, q'=0.95, 1000 pairs per n;";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    implication = implication && r.unexplained == 0;
    if (i) trend = trend && r.lo <= rows[i - 1].hi;
    detail += fmt(" n=%d: cap %d, %zu/%zu failures unexplained, failure rate %.4f [%.4f, %.4f], pairs with a "
                  "failure %.3f, cross-overs %zu;",
                  r.n, r.cap, r.unexplained, r.failures, r.rate, r.lo, r.hi, r.pair_freq, r.crossed);
  }
  detail += implication ? " implication holds;" : " implication FAILS;";
  detail += trend ? " rate non-increasing within 95% CI" : " rate increases beyond its 95% CI";
  return {implication && trend, detail};
}

// 8 ------------------------------------------------------------------------

Verdict phenomenology() {
  const int n = 16;
  const GeometryPlan g = make_geometry(n);
  const EventSpec h = horizontal_3n_n(n);
  const EventEstimate hi = estimate_event_probability(h, g, RateParams::from_q(0.99), 500, derive_key(12, 1));
  const EventEstimate lo = estimate_event_probability(h, g, RateParams::from_q(0.30), 500, derive_key(12, 2));
  std::vector<long long> sizes;
  const Rect interior = g.box_B.grown(-floor_sqrt(n));
  for (std::uint64_t s = 0; s < 500; ++s) {
    const ClusterStats cs =
        extract_clusters(sample_occupancy_field(g, RateParams::from_q(0.30), derive_key(12, 3, s), interior));
    sizes.insert(sizes.end(), cs.sizes.begin(), cs.sizes.end());
  }
  bool exp_wins = false;
  std::string tail;
  try {
    const TailFitPair f = fit_tail(sizes, kDefaultTailFloor);
    exp_wins = f.exponential.goodness > f.power_law.goodness;
    tail = fmt("tail (%zu sizes >= %lld): loglik exponential %.2f vs power law %.2f", f.exponential.n_tail,
               kDefaultTailFloor, f.exponential.goodness, f.power_law.goodness);
  } catch (const InsufficientTailData& e) {
    tail = e.what();
  }
  return {hi.estimate.estimate >= 0.95 && lo.estimate.estimate <= 0.05 && exp_wins,
          fmt("H(3n,n) at n=16: %.3f at q=0.99, %.3f at q=0.30; ", hi.estimate.estimate, lo.estimate.estimate) + tail};
}

// 9 ------------------------------------------------------------------------

Verdict mixing_sandwich() {
  const int n = 16;
  const GeometryPlan g = make_geometry(n);
  const int gap = 2 * floor_sqrt(n) + 1;
  const std::vector<CrossingSpec> events = {{{0, 0, 3 * n, n}, Direction::horizontal, Wrap::none},
                                            {{0, n + gap, 3 * n, 2 * n + gap}, Direction::horizontal, Wrap::none}};
  const MixingReport r = mixing_check(g, RateParams::from_q(0.8), events, 10000, derive_key(13, 1));
  const bool ok = r.positive_association_ok && r.factorization_mismatches == 0 && r.footprints_disjoint;
  return {ok, fmt("k=2, 10^4 replicas, deep scale %d: product %.4f vs joint %.4f (+3 SE %.4f); truncated joint "
                  "%.4f vs product %.4f (z=%.2f); %zu factorization mismatches, %zu nesting violations",
                  r.deep_scale, r.product_stationary, r.joint_stationary.estimate,
                  r.joint_stationary.estimate + 3 * r.joint_stationary.stderr_, r.joint_truncated.estimate,
                  r.product_truncated, r.truncated_factorization_z, r.factorization_mismatches,
                  r.nesting_violations)};
}

// 10 -----------------------------------------------------------------------

Verdict square_root_trick() {
  const int n = 16;
  const double delta = delta_for_scale(n, kDefaultAlpha);
  const GeometryPlan g = make_geometry(n);
  std::size_t fields = 0, events = 0, violations = 0;
  auto check = [&](const OccupancyField& f) {
    const bool a = cylinder_event(f, n).value;
    bool any = false;
    for (const Rect& r : cylinder_sixths(n)) any = any || has_crossing(f, {r, Direction::horizontal, Wrap::cylinder});
    ++fields;
    events += a;
    violations += a && !any;
  };
  const Rect rows{0, n, 6 * n - 1, 2 * n};
  for (std::uint64_t s = 0; s < 500; ++s) {
    const XField xf = sample_xfield(cylinder_xregion(n, delta), delta, RateParams::from_q(0.8), derive_key(14, s));
    check(certified_field(xf, rows, n));
    const Diagram d = sample_region(cylinder_event_region(n), RateParams::from_q(0.75), derive_key(15, s));
    check(occupancy_from_diagram(d, rows, n));
  }
  (void)g;
  return {violations == 0 && events > 0,
          fmt("%zu cylinder fields (certified and eta), %zu with the event, %zu violations", fields, events,
              violations)};
}

// 11 -----------------------------------------------------------------------

Verdict threshold_narrowing() {
  std::vector<double> grid;
  for (int i = 0; i <= 32; ++i) grid.push_back(0.70 + 0.005 * i);
  std::vector<ThresholdWindow> ws;
  std::string detail = "certified cylinder event, eps 0.25, 400 replicas, 33 q values in [0.70, 0.86];";
  for (int n : {8, 16, 32}) {
    const GeometryPlan g = make_geometry(n);
    const double delta = delta_for_scale(n, kDefaultAlpha);
    ws.push_back(threshold_window(g, delta, {EventKind::cylinder, {}}, grid, 400, derive_key(16, static_cast<std::uint64_t>(n))));
    const ThresholdWindow& w = ws.back();
    detail += fmt(" n=%d: [%.4f, %.4f] width %.4f (%.4f..%.4f);", n, w.low.q, w.high.q, w.width, w.width_lo, w.width_hi);
  }
  const bool ok = windows_non_increasing(ws) &&
                  std::all_of(ws.begin(), ws.end(), [](const ThresholdWindow& w) {
                    return w.low.reached && w.high.reached && !w.low.censored;
                  });
  return {ok, detail + (ok ? " non-increasing" : " not non-increasing or not resolved")};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  app.add_option("--only", only, "Criterion numbers to run");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all = {
      {1, "reachability oracle equivalence", reachability_oracle},
      {2, "Russo formula exactness", russo_exactness},
      {3, "truncation nesting and domination", truncation_nesting},
      {4, "certificate soundness", certificate_soundness},
      {5, "independence at distance", independence_at_distance},
      {6, "coupling marginal fidelity", coupling_fidelity},
      {7, "coupling stability audit", stability_audit},
      {8, "percolation phenomenology", phenomenology},
      {9, "mixing sandwich", mixing_sandwich},
      {10, "square-root trick", square_root_trick},
      {11, "threshold narrowing", threshold_narrowing},
  };
  const std::set<int> want(only.begin(), only.end());
  int failed = 0;
  for (const auto& c : all) {
    if (!want.empty() && !want.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %2d %s: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !v.pass;
  }
  return failed ? 1 : 0;
}
