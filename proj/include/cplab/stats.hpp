#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace cplab {

/// Binomial frequency with a Wald interval clipped to [0, 1].
struct BinomialEstimate {
  std::size_t successes = 0;
  std::size_t trials = 0;
  double estimate = 0.0;
  double stderr_ = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.95;
};

BinomialEstimate binomial_estimate(std::size_t successes, std::size_t trials, double level = 0.95);

/// Two-sided standard-normal quantile for a confidence level.
double normal_quantile_two_sided(double level);
/// Inverse of normal_quantile_two_sided.
double two_sided_level(double z);

struct TestResult {
  double statistic = 0.0;
  double df = 0.0;
  double p_value = 1.0;
};

/// Pearson goodness of fit; cells with zero expectation must have zero count.
TestResult chi_square_gof(const std::vector<double>& observed, const std::vector<double>& probs);
/// Homogeneity of two count vectors over the same cells.
TestResult chi_square_two_sample(const std::vector<double>& a, const std::vector<double>& b);

/// Kolmogorov survival function Q(x) = 2 sum (-1)^{k-1} exp(-2 k^2 x^2).
double kolmogorov_q(double x);
TestResult ks_one_sample(std::vector<double> samples, const std::function<double(double)>& cdf);
TestResult ks_two_sample(std::vector<double> a, std::vector<double> b);

struct MeanEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t count = 0;
};

MeanEstimate mean_estimate(const std::vector<double>& xs);

/// Pearson correlation with its large-sample standard error (1 - r^2)/sqrt(N).
struct Correlation {
  double r = 0.0;
  double stderr_ = 0.0;
  std::size_t count = 0;
};

Correlation correlation(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace cplab
