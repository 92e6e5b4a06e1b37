#include "cplab/tail_fit.hpp"

#include <cmath>
#include <limits>

#include <boost/math/tools/minima.hpp>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_zeta.h>

namespace cplab {

std::string to_string(TailModel m) {
  return m == TailModel::exponential ? "exponential" : "power_law";
}

TailFitPair fit_tail(const std::vector<long long>& sizes, long long tail_floor) {
  if (tail_floor < 1) throw std::invalid_argument("tail floor must be >= 1");
  std::vector<long long> tail;
  for (long long s : sizes)
    if (s >= tail_floor) tail.push_back(s);
  if (tail.size() < kMinTailCount) throw InsufficientTailData(tail.size(), kMinTailCount);

  const double count = static_cast<double>(tail.size());
  double sum_excess = 0.0;
  double sum_log = 0.0;
  bool all_equal = true;
  for (long long s : tail) {
    sum_excess += static_cast<double>(s - tail_floor);
    sum_log += std::log(static_cast<double>(s));
    all_equal = all_equal && s == tail.front();
  }

  TailFitPair out;
  TailFit& ex = out.exponential;
  ex.model = TailModel::exponential;
  ex.tail_floor = tail_floor;
  ex.n_tail = tail.size();
  const double mean = sum_excess / count;
  if (mean == 0.0) {
    ex.degenerate = true;
    ex.rate_or_exponent = std::numeric_limits<double>::infinity();
    ex.goodness = 0.0;
  } else {
    ex.rate_or_exponent = std::log1p(1.0 / mean);
    const double rho = mean / (1.0 + mean);
    ex.goodness = count * std::log1p(-rho) + sum_excess * std::log(rho);
  }
  ex.degenerate = ex.degenerate || all_equal;

  TailFit& pl = out.power_law;
  pl.model = TailModel::power_law;
  pl.tail_floor = tail_floor;
  pl.n_tail = tail.size();
  pl.degenerate = all_equal;
  const double fl = static_cast<double>(tail_floor);
  gsl_set_error_handler_off();
  auto neg_ll = [&](double a) {
    gsl_sf_result z;
    if (gsl_sf_hzeta_e(a, fl, &z) != GSL_SUCCESS || !(z.val > 0.0))
      return std::numeric_limits<double>::max();
    return a * sum_log + count * std::log(z.val);
  };
  const auto best = boost::math::tools::brent_find_minima(neg_ll, 1.0 + 1e-6, 30.0, 40);
  pl.rate_or_exponent = best.first;
  pl.goodness = -best.second;
  return out;
}

TailFitPair fit_tail(const ClusterStats& stats, long long tail_floor) {
  return fit_tail(stats.sizes, tail_floor);
}

}  // namespace cplab
