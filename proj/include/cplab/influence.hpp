#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cplab/stats.hpp"

namespace cplab {

/// Product measure on {0,1}^n_vars; variable i is 1 with probability
/// p_of_class[class_of[i]].
struct ProductSpace {
  int n_vars = 0;
  std::vector<int> class_of;
  std::vector<double> p_of_class;

  static ProductSpace uniform(int n_vars, double p);
  /// Variables in `first` get p1, the rest p2.
  static ProductSpace two_class(int n_vars, const std::vector<int>& first, double p1, double p2);

  double p(int var) const { return p_of_class[static_cast<std::size_t>(class_of[static_cast<std::size_t>(var)])]; }
  /// Throws std::invalid_argument on a malformed space.
  void validate() const;
};

/// Bit i of the assignment is variable i.
using Assignment = std::uint32_t;

struct MonotoneEvent {
  std::function<bool(Assignment)> evaluator;
  bool declared_monotone = true;

  bool operator()(Assignment a) const { return evaluator(a); }
};

inline constexpr int kMaxExactVars = 24;

struct ClassInfluence {
  std::string key;
  std::size_t members = 0;
  /// Mean influence of a member.
  double influence = 0.0;
  double stderr_ = 0.0;
  /// Sum over members.
  double total = 0.0;
};

struct InfluenceReport {
  /// Per variable; empty for Monte Carlo reports.
  std::vector<double> influence;
  std::vector<ClassInfluence> classes;
  double probability = 0.0;
  double probability_se = 0.0;
  double sum_influences = 0.0;
  double sum_influences_se = 0.0;
  std::optional<double> russo_residual;
  /// Number of variables attaining the maximal influence.
  std::size_t m = 1;
  double max_influence = 0.0;
};

/// Exact influences by full enumeration.  Throws std::invalid_argument when
/// n_vars exceeds kMaxExactVars.
InfluenceReport influence_exact(const ProductSpace& space, const MonotoneEvent& event);

/// Exact P(A).
double event_probability(const ProductSpace& space, const MonotoneEvent& event);

/// |centered difference of P(A) in the class parameter - sum of that class's
/// influences|.
double russo_derivative_check(const ProductSpace& space, const MonotoneEvent& event, int cls,
                              double h);

/// Random mutation test: flips 0 -> 1 never turn the event off.  Returns the
/// number of violations among `trials` random (assignment, variable) pairs.
std::size_t monotone_violations(int n_vars, const MonotoneEvent& event, std::size_t trials,
                                std::uint64_t seed);

/// Ratios of sum I to the right-hand sides of the two influence inequalities,
/// with the universal constant set to 1: the largest constant for which each
/// would hold on this instance.  Empty when a side is undefined.
struct TalagrandRatios {
  std::optional<double> max_influence_form;
  std::optional<double> multiplicity_form;
};

TalagrandRatios talagrand_ratios(const ProductSpace& space, const InfluenceReport& report);

}  // namespace cplab
