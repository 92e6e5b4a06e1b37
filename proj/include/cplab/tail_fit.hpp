#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "cplab/percolation.hpp"

namespace cplab {

enum class TailModel { exponential, power_law };

std::string to_string(TailModel m);

struct TailFit {
  TailModel model = TailModel::exponential;
  /// Decay rate (exponential) or exponent (power law).
  double rate_or_exponent = 0.0;
  long long tail_floor = 10;
  /// Maximized log-likelihood on the sizes >= tail_floor.
  double goodness = 0.0;
  std::size_t n_tail = 0;
  /// All tail sizes equal: the exponential rate is infinite.
  bool degenerate = false;
};

struct TailFitPair {
  TailFit exponential;
  TailFit power_law;
};

class InsufficientTailData : public std::runtime_error {
 public:
  InsufficientTailData(std::size_t have, std::size_t need)
      : std::runtime_error("insufficient tail data: " + std::to_string(have) + " sizes, need " +
                           std::to_string(need)),
        have_(have) {}
  std::size_t have() const { return have_; }

 private:
  std::size_t have_;
};

inline constexpr long long kDefaultTailFloor = 10;
inline constexpr std::size_t kMinTailCount = 50;

/// Discrete maximum-likelihood fits on sizes >= tail_floor:
///   exponential  P(s) = (1 - e^-r) e^{-r (s - floor)}
///   power law    P(s) = s^-a / zeta(a, floor)
TailFitPair fit_tail(const std::vector<long long>& sizes, long long tail_floor = kDefaultTailFloor);
TailFitPair fit_tail(const ClusterStats& stats, long long tail_floor = kDefaultTailFloor);

}  // namespace cplab
