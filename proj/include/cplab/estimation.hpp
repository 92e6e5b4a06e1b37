#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cplab/percolation.hpp"
#include "cplab/stats.hpp"

namespace cplab {

enum class EventKind { crossing, cylinder, always_true, always_false };

struct EventSpec {
  EventKind kind = EventKind::crossing;
  CrossingSpec crossing;
};

/// Crossings of [n, 4n] x [n, 2n], a translate of [0, 3n] x [0, n].
EventSpec horizontal_3n_n(int n);
EventSpec vertical_3n_n(int n);

/// Evaluates the event on one replica.  Only the diagram region the event
/// reads is sampled.
bool evaluate_event(const EventSpec& event, const GeometryPlan& g, const RateParams& params,
                    std::uint64_t seed);

struct EventEstimate {
  BinomialEstimate estimate;
  std::vector<std::uint8_t> outcomes;
};

/// Replica i uses seed derive_key(seed, i); results do not depend on threads.
EventEstimate estimate_event_probability(const EventSpec& event, const GeometryPlan& g,
                                         const RateParams& params, std::size_t replicas,
                                         std::uint64_t seed, double level = 0.95, int threads = 1);

struct MixingReport {
  std::size_t k = 0;
  std::size_t replicas = 0;
  int n = 0;
  /// Deeper truncation scale standing in for the stationary measure.
  int deep_scale = 0;
  BinomialEstimate joint_stationary;
  std::vector<BinomialEstimate> marginal_stationary;
  double product_stationary = 0.0;
  double product_stationary_se = 0.0;
  BinomialEstimate joint_truncated;
  std::vector<BinomialEstimate> marginal_truncated;
  double product_truncated = 0.0;
  double product_truncated_se = 0.0;
  /// product_stationary <= joint_stationary + 3 SE.
  bool positive_association_ok = false;
  /// |joint_truncated - product_truncated| in standard errors.
  double truncated_factorization_z = 0.0;
  bool footprints_disjoint = false;
  /// Replicas where a truncated field on the shared diagram differs from the
  /// same field on the diagram restricted to that rectangle's footprint.
  std::size_t factorization_mismatches = 0;
  /// Replicas where the deep field exceeded the truncated field somewhere.
  std::size_t nesting_violations = 0;
};

/// Each event is an increasing crossing event on its rectangle; rectangles
/// must be pairwise at L-infinity distance > 2 floor(sqrt n).  deep_scale = 0
/// selects 4n.
MixingReport mixing_check(const GeometryPlan& g, const RateParams& params,
                          const std::vector<CrossingSpec>& events, std::size_t replicas,
                          std::uint64_t seed, int deep_scale = 0, double level = 0.95,
                          int threads = 1);

enum class FiniteSizeBranch { a, b, neither };
std::string to_string(FiniteSizeBranch b);

inline constexpr double kDefaultEpsHat = 0.05;

struct FiniteSizeReport {
  BinomialEstimate vertical;
  BinomialEstimate horizontal;
  double eps_hat = kDefaultEpsHat;
  FiniteSizeBranch branch = FiniteSizeBranch::neither;
};

/// Branch a when the V(3n, n) estimate is below eps_hat, b when the H(3n, n)
/// estimate exceeds 1 - eps_hat.  Both come from the same fields.
FiniteSizeReport finite_size_report(const GeometryPlan& g, const RateParams& params,
                                    double eps_hat, std::size_t replicas, std::uint64_t seed,
                                    double level = 0.95, int threads = 1);

}  // namespace cplab
