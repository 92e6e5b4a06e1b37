#include "cplab/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>

#include "cplab/json_io.hpp"
#include "cplab/reachability.hpp"
#include "cplab/rng.hpp"

namespace cplab {

IntervalGrid IntervalGrid::for_geometry(const GeometryPlan& g, double delta1) {
  if (!(delta1 > 0.0) || delta1 > g.n) throw std::invalid_argument("delta1 must lie in (0, n]");
  return {g.box_B, delta1, static_cast<int>(std::floor(g.n / delta1 + 1e-12))};
}

IntervalGrid IntervalGrid::for_targets(const Rect& targets, int n, double delta, double delta1) {
  if (!(delta1 > 0.0) || !(delta > 0.0)) throw std::invalid_argument("delta and delta1 must be positive");
  const double depth = std::sqrt(static_cast<double>(n)) + delta;
  return {targets.grown(floor_sqrt(n) + 1), delta1,
          static_cast<int>(std::ceil(depth / delta1 - 1e-12))};
}

double delta1_for_scale(int n, double alpha) {
  if (n < 1 || !(alpha > 0.0)) throw std::invalid_argument("delta1 needs n >= 1 and alpha > 0");
  return std::pow(static_cast<double>(n), -alpha / 2.0);
}

namespace {

struct UnionFind {
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::size_t> parent;
};

int level_of(double t, double delta1) { return static_cast<int>(std::floor(-t / delta1)); }

}  // namespace

IntervalClusterSet build_partial_information(const IntervalGrid& grid,
                                             const std::vector<GridParticle>& particles) {
  const auto total = static_cast<std::size_t>(grid.count());
  std::vector<int> count(total, 0);
  std::vector<std::pair<double, std::size_t>> located;
  located.reserve(particles.size());
  for (const auto& p : particles) {
    const int k = level_of(p.time, grid.delta1);
    if (!grid.box.contains(p.v) || k < 0 || k >= grid.levels)
      throw std::invalid_argument("particle outside the interval grid");
    const auto idx = static_cast<std::size_t>(grid.index(p.v, k));
    ++count[idx];
    located.emplace_back(p.time, idx);
  }
  UnionFind uf(total);
  for (std::size_t i = 0; i < grid.box.count(); ++i) {
    const Vertex v = grid.box.at(i);
    for (int k = 0; k < grid.levels; ++k) {
      const auto a = static_cast<std::size_t>(grid.index(v, k));
      if (!count[a]) continue;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const Vertex w{v.x + dx, v.y + dy};
          if (!grid.box.contains(w)) continue;
          for (int dk = -1; dk <= 1; ++dk) {
            const int l = k + dk;
            if (l < 0 || l >= grid.levels) continue;
            const auto b = static_cast<std::size_t>(grid.index(w, l));
            if (b != a && count[b]) uf.unite(a, b);
          }
        }
    }
  }
  IntervalClusterSet out;
  out.grid = grid;
  out.particles = particles.size();
  std::vector<int> cluster_of(total, -1);
  std::vector<int> slot_of(total, -1);
  for (std::size_t a = 0; a < total; ++a) {
    if (!count[a]) continue;
    const std::size_t root = uf.find(a);
    if (cluster_of[root] < 0) {
      cluster_of[root] = static_cast<int>(out.clusters.size());
      out.clusters.emplace_back();
    }
    IntervalCluster& c = out.clusters[static_cast<std::size_t>(cluster_of[root])];
    slot_of[a] = static_cast<int>(c.intervals.size());
    const auto per_vertex = static_cast<std::size_t>(grid.levels);
    c.intervals.push_back({grid.box.at(a / per_vertex), static_cast<int>(a % per_vertex)});
    c.counts.push_back(count[a]);
    cluster_of[a] = cluster_of[root];
  }
  std::sort(located.begin(), located.end());
  for (const auto& [t, idx] : located)
    out.clusters[static_cast<std::size_t>(cluster_of[idx])].order.push_back(slot_of[idx]);
  return out;
}

IntervalClusterSet sample_partial_information(const IntervalGrid& grid, std::uint64_t seed) {
  if (grid.levels < 1 || grid.box.empty()) throw std::invalid_argument("empty interval grid");
  CounterRng rng(derive_key(seed, 0x5041));
  std::poisson_distribution<long long> poisson(grid.delta1 * static_cast<double>(grid.count()));
  const long long n = poisson(rng);
  std::vector<GridParticle> ps;
  ps.reserve(static_cast<std::size_t>(n));
  const auto total = static_cast<double>(grid.count());
  for (long long i = 0; i < n; ++i) {
    auto idx = static_cast<long long>(rng.uniform() * total);
    idx = std::min(idx, grid.count() - 1);
    const Vertex v = grid.box.at(static_cast<std::size_t>(idx / grid.levels));
    const int k = static_cast<int>(idx % grid.levels);
    ps.push_back({v, -(k + rng.uniform()) * grid.delta1});
  }
  return build_partial_information(grid, ps);
}

std::vector<double> assign_times(const IntervalCluster& c, double delta1, std::uint64_t seed) {
  if (c.counts.size() != c.intervals.size()) throw std::invalid_argument("cluster counts mismatch");
  std::vector<int> seen(c.intervals.size(), 0);
  for (int s : c.order) {
    if (s < 0 || static_cast<std::size_t>(s) >= c.intervals.size())
      throw std::invalid_argument("order refers to an unknown interval");
    ++seen[static_cast<std::size_t>(s)];
  }
  if (seen != c.counts) throw std::invalid_argument("order disagrees with interval counts");
  // Increasing time means non-increasing level.
  for (std::size_t j = 1; j < c.order.size(); ++j)
    if (c.intervals[static_cast<std::size_t>(c.order[j])].k >
        c.intervals[static_cast<std::size_t>(c.order[j - 1])].k)
      throw std::invalid_argument("order is inconsistent with interval levels");
  // Particles of one level share an interval of time, so given their order
  // their times are the order statistics of iid uniforms on it.
  CounterRng rng(seed);
  std::vector<double> times(c.order.size());
  std::size_t j = 0;
  std::vector<double> us;
  while (j < c.order.size()) {
    const int k = c.intervals[static_cast<std::size_t>(c.order[j])].k;
    std::size_t e = j;
    while (e < c.order.size() && c.intervals[static_cast<std::size_t>(c.order[e])].k == k) ++e;
    us.clear();
    for (std::size_t i = j; i < e; ++i) us.push_back(rng.uniform());
    std::sort(us.begin(), us.end());
    for (std::size_t i = j; i < e; ++i) times[i] = -(k + 1) * delta1 + us[i - j] * delta1;
    j = e;
  }
  return times;
}

namespace {

bool has_close_pair(const std::vector<double>& sorted_times, double delta) {
  for (std::size_t j = 1; j < sorted_times.size(); ++j)
    if (sorted_times[j] - sorted_times[j - 1] < delta) return true;
  return false;
}

// Particles per occupied level in decreasing level order.
std::vector<std::pair<int, int>> level_counts(const IntervalCluster& c) {
  std::map<int, int, std::greater<int>> m;
  for (std::size_t s = 0; s < c.intervals.size(); ++s) m[c.intervals[s].k] += c.counts[s];
  return {m.begin(), m.end()};
}

}  // namespace

double close_pair_probability(const IntervalCluster& c, double delta1, double delta) {
  const auto levels = level_counts(c);
  double none = 1.0;
  std::size_t i = 0;
  while (i < levels.size()) {
    std::size_t e = i + 1;
    while (e < levels.size() && levels[e].first == levels[e - 1].first - 1) ++e;
    if (e == i + 1) {
      // m uniform points on an interval of length delta1 with all spacings
      // at least delta.
      const int m = levels[i].second;
      const double base = std::max(0.0, 1.0 - (m - 1) * delta / delta1);
      none *= std::pow(base, m);
    } else {
      IntervalCluster run;
      std::uint64_t key = 0x52554E;
      for (std::size_t j = i; j < e; ++j) {
        run.intervals.push_back({{0, 0}, levels[j].first});
        run.counts.push_back(levels[j].second);
        for (int r = 0; r < levels[j].second; ++r) run.order.push_back(static_cast<int>(j - i));
        key = derive_key(key, static_cast<std::uint64_t>(levels[j].first), static_cast<std::uint64_t>(levels[j].second));
      }
      constexpr int kDraws = 200000;
      int clear = 0;
      for (int d = 0; d < kDraws; ++d)
        clear += !has_close_pair(assign_times(run, delta1, derive_key(key, static_cast<std::uint64_t>(d))), delta);
      none *= static_cast<double>(clear) / kDraws;
    }
    i = e;
  }
  return 1.0 - none;
}

int CouplingParams::size_cap() const {
  return static_cast<int>(std::floor(beta_prime * std::log(static_cast<double>(n)) + 1e-9));
}

void CouplingParams::validate() const {
  if (!(q > 0.0 && q <= q_prime && q_prime < 1.0)) throw std::invalid_argument("coupling needs 0 < q <= q' < 1");
  if (!(delta > 0.0 && delta1 > 0.0)) throw std::invalid_argument("delta and delta1 must be positive");
  if (delta > delta1) throw std::invalid_argument("delta must not exceed delta1");
  if (n < 2) throw std::invalid_argument("coupling needs n >= 2");
  if (beta_prime < 0.0) throw std::invalid_argument("beta' must be non-negative");
}

double default_beta_prime(double q, double q_prime, int n, double alpha) {
  if (n < 2) throw std::invalid_argument("default beta' needs n >= 2");
  const double bound = std::pow(static_cast<double>(n), -alpha / 2.0);
  int c = 1;
  while (c < 1000 && std::pow(q_prime - q, c + 1) >= 2.0 * (c + 1) * (c + 1) * bound) ++c;
  return c / std::log(static_cast<double>(n));
}

namespace {

std::vector<double> sorted_copy(std::vector<double> t) {
  std::sort(t.begin(), t.end());
  return t;
}

Mark resolve(Mark tentative, double u, double threshold) {
  return u < threshold ? tentative : Mark::star;
}

// Time assignment conditioned on the presence (want = true) or absence of a
// close pair, by rejection.
std::vector<double> times_given(const IntervalCluster& c, double delta1, double delta, bool want,
                                std::uint64_t seed) {
  for (std::uint64_t a = 0; a < 10000000; ++a) {
    std::vector<double> t = assign_times(c, delta1, derive_key(seed, a));
    if (has_close_pair(sorted_copy(t), delta) == want) return t;
  }
  throw std::runtime_error("time assignment rejection did not terminate");
}

}  // namespace

CoupledCluster couple_cluster(const IntervalCluster& c, const CouplingParams& p, std::uint64_t seed) {
  p.validate();
  const std::size_t m = c.size();
  CoupledCluster out;
  CounterRng labels(derive_key(seed, 0));
  for (std::size_t j = 0; j < m; ++j) {
    out.tentative.push_back(kArrows[static_cast<std::size_t>(labels.below(4))]);
    out.u.push_back(labels.uniform());
  }
  out.times1 = assign_times(c, p.delta1, derive_key(seed, 1));
  out.times2 = out.times1;
  bool all_between = true;
  for (std::size_t j = 0; j < m; ++j) {
    out.copy1.push_back(resolve(out.tentative[j], out.u[j], p.q));
    out.copy2.push_back(resolve(out.tentative[j], out.u[j], p.q_prime));
    all_between = all_between && out.u[j] > p.q && out.u[j] < p.q_prime;
  }
  out.b_event = has_close_pair(sorted_copy(out.times1), p.delta);
  out.g_event = m > 0 && all_between;
  out.oversized = static_cast<int>(m) > p.size_cap();
  if (out.oversized || !p.crossover || m < 2) return out;

  const double pb = close_pair_probability(c, p.delta1, p.delta);
  const double g = std::pow(p.q_prime - p.q, static_cast<double>(m));
  const double bad = pb * (1.0 - g);
  const double good = g * (1.0 - pb);
  if (bad == 0.0) return out;
  if (bad > good) {
    out.infeasible = true;
    return out;
  }
  out.match_fraction = bad / good;
  CounterRng pick(derive_key(seed, 2));
  const double draw = pick.uniform();
  if (out.b_event && !out.g_event) {
    // Second copy from G \ B: no close pair, every label in (q, q').
    out.crossover = Crossover::from_bad;
    out.times2 = times_given(c, p.delta1, p.delta, false, derive_key(seed, 3));
    out.copy2 = out.tentative;
  } else if (out.g_event && !out.b_event && draw < out.match_fraction) {
    // Second copy from B \ G: a close pair and some label outside (q, q').
    out.crossover = Crossover::from_good;
    out.times2 = times_given(c, p.delta1, p.delta, true, derive_key(seed, 3));
    CounterRng relabel(derive_key(seed, 4));
    std::vector<double> u(m);
    for (;;) {
      bool between = true;
      for (auto& x : u) {
        x = relabel.uniform();
        between = between && x > p.q && x < p.q_prime;
      }
      if (!between) break;
    }
    for (std::size_t j = 0; j < m; ++j) out.copy2[j] = resolve(out.tentative[j], u[j], p.q_prime);
  }
  return out;
}

CoupledDiagrams couple_diagrams(const IntervalGrid& grid, const CouplingParams& p, std::uint64_t seed) {
  p.validate();
  const IntervalClusterSet set = sample_partial_information(grid, derive_key(seed, 0));
  DiagramBuilder b1(grid.region(), RateParams::from_q(p.q), seed);
  DiagramBuilder b2(grid.region(), RateParams::from_q(p.q_prime), seed);
  std::vector<int> interval_cluster(static_cast<std::size_t>(grid.count()), -1);
  std::vector<ClusterFlags> flags;
  std::size_t dominance = 0;
  for (std::size_t ci = 0; ci < set.clusters.size(); ++ci) {
    const IntervalCluster& c = set.clusters[ci];
    for (const auto& iv : c.intervals)
      interval_cluster[static_cast<std::size_t>(grid.index(iv.v, iv.k))] = static_cast<int>(ci);
    const CoupledCluster cc = couple_cluster(c, p, derive_key(seed, 1, ci));
    for (std::size_t j = 0; j < c.size(); ++j) {
      const Vertex v = c.intervals[static_cast<std::size_t>(c.order[j])].v;
      b1.add(v, cc.times1[j], cc.copy1[j]);
      b2.add(v, cc.times2[j], cc.copy2[j]);
      if (cc.crossover == Crossover::none && is_arrow(cc.copy1[j]) &&
          (cc.copy2[j] != cc.copy1[j] || cc.times2[j] != cc.times1[j]))
        ++dominance;
    }
    flags.push_back({c.size(), cc.crossover != Crossover::none, cc.b_event, cc.g_event, cc.oversized,
                     cc.infeasible});
  }
  return {std::move(b1).build(), std::move(b2).build(), grid, p, std::move(flags),
          std::move(interval_cluster), dominance};
}

StabilityAudit verify_stability(const CoupledDiagrams& c, const Rect& targets, int n, double delta) {
  const IntervalGrid& grid = c.grid;
  const int r = floor_sqrt(n);
  const int depth_levels =
      std::min(grid.levels, static_cast<int>(std::ceil((std::sqrt(static_cast<double>(n)) + delta) / grid.delta1)));
  StabilityAudit a;
  for (const auto& f : c.flags) {
    a.max_cluster_size = std::max(a.max_cluster_size, f.size);
    a.any_oversized = a.any_oversized || f.oversized || f.infeasible;
  }
  for (std::size_t i = 0; i < targets.count(); ++i) {
    const Vertex x = targets.at(i);
    ++a.targets;
    const BoundarySpec b = BoundarySpec::for_scale(x, n);
    if (!reachable(c.copy1, b)) continue;
    ++a.occupied_copy1;
    if (delta_stable_reachable(c.copy2, b, delta)) continue;
    a.failures.push_back(x);
    bool explained = false;
    for (int y = x.y - r - 1; y <= x.y + r + 1 && !explained; ++y)
      for (int xx = x.x - r - 1; xx <= x.x + r + 1 && !explained; ++xx) {
        if (!grid.box.contains(Vertex{xx, y})) continue;
        for (int k = 0; k < depth_levels && !explained; ++k) {
          const int id = c.interval_cluster[static_cast<std::size_t>(grid.index({xx, y}, k))];
          if (id < 0) continue;
          const ClusterFlags& f = c.flags[static_cast<std::size_t>(id)];
          explained = f.oversized || f.infeasible;
        }
      }
    a.explained_failures += explained;
  }
  return a;
}

nlohmann::json audit_json(const CoupledDiagrams& c, const StabilityAudit& a) {
  std::map<std::size_t, std::size_t> hist;
  std::size_t b = 0, g = 0, crossed = 0, oversized = 0, infeasible = 0;
  for (const auto& f : c.flags) {
    ++hist[f.size];
    b += f.b_event;
    g += f.g_event;
    crossed += f.crossed_over;
    oversized += f.oversized;
    infeasible += f.infeasible;
  }
  nlohmann::json h = nlohmann::json::array();
  for (const auto& [size, count] : hist) h.push_back({size, count});
  nlohmann::json fails = nlohmann::json::array();
  for (const Vertex& v : a.failures) fails.push_back({v.x, v.y});
  return {{"q", c.params.q},
          {"q_prime", c.params.q_prime},
          {"delta", c.params.delta},
          {"delta1", c.params.delta1},
          {"n", c.params.n},
          {"beta_prime", c.params.beta_prime},
          {"size_cap", c.params.size_cap()},
          {"grid", {{"box", to_json(c.grid.box)}, {"levels", c.grid.levels}}},
          {"clusters", c.flags.size()},
          {"cluster_size_histogram", h},
          {"b_events", b},
          {"g_events", g},
          {"crossed_over", crossed},
          {"oversized", oversized},
          {"infeasible", infeasible},
          {"dominance_violations", c.dominance_violations},
          {"targets", a.targets},
          {"occupied_copy1", a.occupied_copy1},
          {"failures", fails},
          {"explained_failures", a.explained_failures},
          {"max_cluster_size", a.max_cluster_size}};
}

}  // namespace cplab
