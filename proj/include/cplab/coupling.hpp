#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "json.hpp"

#include "cplab/diagram.hpp"

namespace cplab {

/// Time axes of `box` cut into intervals (-(k+1) delta1, -k delta1],
/// k = 0 .. levels - 1.
struct IntervalGrid {
  Rect box;
  double delta1 = 0.0;
  int levels = 0;

  /// B_n with floor(n / delta1) levels.
  static IntervalGrid for_geometry(const GeometryPlan& g, double delta1);
  /// targets grown by floor(sqrt n) + 1, deep enough for delta-stability
  /// checks at scale n.
  static IntervalGrid for_targets(const Rect& targets, int n, double delta, double delta1);

  /// Total number of intervals.
  long long count() const { return static_cast<long long>(box.count()) * levels; }
  double depth() const { return levels * delta1; }
  long long index(Vertex v, int k) const {
    return static_cast<long long>(box.index(v)) * levels + k;
  }
  SpaceTimeBox region() const { return {box, depth(), false}; }
};

/// delta1 = n^(-alpha / 2).
double delta1_for_scale(int n, double alpha);

struct IntervalId {
  Vertex v;
  int k = 0;

  friend bool operator==(const IntervalId&, const IntervalId&) = default;
};

/// A cluster of occupied intervals with its partial information: particle
/// counts per interval and the relative time order of its particles.
struct IntervalCluster {
  std::vector<IntervalId> intervals;
  std::vector<int> counts;
  /// order[j] is the slot in `intervals` of the j-th particle in increasing
  /// time.
  std::vector<int> order;

  std::size_t size() const { return order.size(); }
};

struct IntervalClusterSet {
  IntervalGrid grid;
  std::vector<IntervalCluster> clusters;
  std::size_t particles = 0;
};

/// A particle with its precise location, used to build partial information.
struct GridParticle {
  Vertex v;
  double time = 0.0;
};

/// Clusters of occupied intervals (neighbours: L-infinity distance <= 1 and
/// levels differing by at most 1) with counts and relative order only.
IntervalClusterSet build_partial_information(const IntervalGrid& grid,
                                             const std::vector<GridParticle>& particles);

/// N ~ Poisson(delta1 * count) particles placed uniformly on the grid, then
/// reduced to partial information.
IntervalClusterSet sample_partial_information(const IntervalGrid& grid, std::uint64_t seed);

/// Precise times from their conditional law given intervals and order.
/// Throws std::invalid_argument on inconsistent partial information.
std::vector<double> assign_times(const IntervalCluster& c, double delta1, std::uint64_t seed);

/// Conditional probability that two particles of the cluster lie closer
/// than delta in time.  Exact when the occupied levels form runs of length
/// one; otherwise a Monte Carlo estimate from 2 * 10^5 time assignments.
double close_pair_probability(const IntervalCluster& c, double delta1, double delta);

struct CouplingParams {
  double q = 0.0;
  double q_prime = 0.0;
  double delta = 0.0;
  double delta1 = 0.0;
  int n = 0;
  double beta_prime = 0.0;
  bool crossover = true;

  /// Largest cluster size that is not oversized: floor(beta' log n).
  int size_cap() const;
  void validate() const;
};

/// Default beta': the largest c such that every size 2..c satisfies
/// (q' - q)^c >= 2 c^2 n^(-alpha/2), divided by log n.  Size 1 always
/// qualifies since a single particle has no close pair.
double default_beta_prime(double q, double q_prime, int n, double alpha);

enum class Crossover { none, from_bad, from_good };

struct CoupledCluster {
  std::vector<Mark> tentative;
  std::vector<double> u;
  std::vector<double> times1;
  std::vector<double> times2;
  std::vector<Mark> copy1;
  std::vector<Mark> copy2;
  bool b_event = false;
  bool g_event = false;
  bool oversized = false;
  /// Small cluster whose close-pair probability exceeds what G can absorb.
  bool infeasible = false;
  Crossover crossover = Crossover::none;
  /// Probability of the matched good set, P(B') / P(G \ B).
  double match_fraction = 0.0;
};

/// Per-particle coupling: tentative arrows and labels U, time assignment,
/// marks by U against q and q', then the cross-over between B \ G and a
/// matched part of G \ B for clusters of size <= size_cap.
CoupledCluster couple_cluster(const IntervalCluster& c, const CouplingParams& p, std::uint64_t seed);

struct ClusterFlags {
  std::size_t size = 0;
  bool crossed_over = false;
  bool b_event = false;
  bool g_event = false;
  bool oversized = false;
  bool infeasible = false;
};

struct CoupledDiagrams {
  Diagram copy1;
  Diagram copy2;
  IntervalGrid grid;
  CouplingParams params;
  std::vector<ClusterFlags> flags;
  /// Cluster id of every interval, -1 when empty.
  std::vector<int> interval_cluster;
  /// Dominance failures on non-crossed-over clusters; always 0.
  std::size_t dominance_violations = 0;
};

/// Independent per-cluster couplings assembled into two diagrams.
CoupledDiagrams couple_diagrams(const IntervalGrid& grid, const CouplingParams& p, std::uint64_t seed);

struct StabilityAudit {
  std::size_t targets = 0;
  std::size_t occupied_copy1 = 0;
  /// Occupied in copy 1 without a delta-stable witness in copy 2.
  std::vector<Vertex> failures;
  /// Failures with an oversized or infeasible cluster meeting the target's
  /// footprint.
  std::size_t explained_failures = 0;
  bool any_oversized = false;
  std::size_t max_cluster_size = 0;

  std::size_t unexplained() const { return failures.size() - explained_failures; }
};

/// Checks every target: eta^(n) = 1 in copy 1 must give a delta-stable path
/// in copy 2.
StabilityAudit verify_stability(const CoupledDiagrams& c, const Rect& targets, int n, double delta);

/// Audit record: cluster-size histogram, B/G/cross-over counts, failures.
nlohmann::json audit_json(const CoupledDiagrams& c, const StabilityAudit& a);

}  // namespace cplab
