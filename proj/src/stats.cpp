#include "cplab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

namespace cplab {

double normal_quantile_two_sided(double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("confidence level must be in (0,1)");
  return boost::math::quantile(boost::math::normal(), 0.5 + level / 2.0);
}

double two_sided_level(double z) {
  return 2.0 * boost::math::cdf(boost::math::normal(), z) - 1.0;
}

BinomialEstimate binomial_estimate(std::size_t successes, std::size_t trials, double level) {
  if (trials == 0) throw std::invalid_argument("no trials");
  if (successes > trials) throw std::invalid_argument("successes exceed trials");
  BinomialEstimate e;
  e.successes = successes;
  e.trials = trials;
  e.level = level;
  e.estimate = static_cast<double>(successes) / static_cast<double>(trials);
  e.stderr_ = std::sqrt(e.estimate * (1.0 - e.estimate) / static_cast<double>(trials));
  const double z = normal_quantile_two_sided(level);
  e.lo = std::max(0.0, e.estimate - z * e.stderr_);
  e.hi = std::min(1.0, e.estimate + z * e.stderr_);
  return e;
}

namespace {

double chi_square_sf(double stat, double df) {
  if (df < 1.0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), stat));
}

}  // namespace

TestResult chi_square_gof(const std::vector<double>& observed, const std::vector<double>& probs) {
  if (observed.size() != probs.size() || observed.empty())
    throw std::invalid_argument("chi-square: size mismatch");
  double total = 0.0;
  for (double o : observed) total += o;
  TestResult r;
  int cells = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = total * probs[i];
    if (e <= 0.0) {
      if (observed[i] > 0.0) return {std::numeric_limits<double>::infinity(), 0.0, 0.0};
      continue;
    }
    r.statistic += (observed[i] - e) * (observed[i] - e) / e;
    ++cells;
  }
  r.df = cells - 1;
  r.p_value = chi_square_sf(r.statistic, r.df);
  return r;
}

TestResult chi_square_two_sample(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("chi-square: size mismatch");
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += a[i];
    nb += b[i];
  }
  TestResult r;
  int cells = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double col = a[i] + b[i];
    if (col == 0.0) continue;
    const double ea = col * na / (na + nb);
    const double eb = col * nb / (na + nb);
    r.statistic += (a[i] - ea) * (a[i] - ea) / ea + (b[i] - eb) * (b[i] - eb) / eb;
    ++cells;
  }
  r.df = cells - 1;
  r.p_value = chi_square_sf(r.statistic, r.df);
  return r;
}

double kolmogorov_q(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

TestResult ks_one_sample(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  const double sn = std::sqrt(n);
  return {d, 0.0, kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)};
}

TestResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks: no samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return {d, 0.0, kolmogorov_q((ne + 0.12 + 0.11 / ne) * d)};
}

MeanEstimate mean_estimate(const std::vector<double>& xs) {
  MeanEstimate m;
  m.count = xs.size();
  if (xs.empty()) return m;
  double s = 0.0;
  for (double x : xs) s += x;
  m.mean = s / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.stderr_ = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  }
  return m;
}

Correlation correlation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 3) throw std::invalid_argument("correlation: bad sizes");
  const MeanEstimate ma = mean_estimate(a);
  const MeanEstimate mb = mean_estimate(b);
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma.mean) * (b[i] - mb.mean);
    saa += (a[i] - ma.mean) * (a[i] - ma.mean);
    sbb += (b[i] - mb.mean) * (b[i] - mb.mean);
  }
  Correlation c;
  c.count = a.size();
  c.r = (saa > 0.0 && sbb > 0.0) ? sab / std::sqrt(saa * sbb) : 0.0;
  c.stderr_ = (1.0 - c.r * c.r) / std::sqrt(static_cast<double>(a.size()));
  return c;
}

}  // namespace cplab
