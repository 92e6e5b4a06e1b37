#pragma once

#include <array>
#include <string>

namespace cplab {

enum class RateMode { lambda, q };

/// Contact-process rates in one of two equivalent parametrizations.
///
/// lambda mode: infection rate lambda per direction, recovery rate 1
/// (total point rate 4*lambda + 1 per vertex).  q mode: infection rate q/4 per
/// direction, recovery 1 - q (total point rate 1).  Both values are stored so
/// switching the mode is lossless; lambda = q / (4 (1 - q)).
class RateParams {
 public:
  static RateParams from_lambda(double lambda);
  static RateParams from_q(double q);

  RateMode mode() const { return mode_; }
  double lambda() const { return lambda_; }
  double q() const { return q_; }

  /// Value in the active mode.
  double value() const { return mode_ == RateMode::q ? q_ : lambda_; }
  double total_rate() const { return mode_ == RateMode::q ? 1.0 : 4.0 * lambda_ + 1.0; }
  double arrow_rate() const { return mode_ == RateMode::q ? q_ / 4.0 : lambda_; }
  double star_rate() const { return mode_ == RateMode::q ? 1.0 - q_ : 1.0; }
  /// Probability that a point is an arrow (any direction).
  double arrow_probability() const { return 4.0 * arrow_rate() / total_rate(); }

  RateParams with_mode(RateMode m) const;

  friend bool operator==(const RateParams&, const RateParams&) = default;

 private:
  RateParams(RateMode m, double lambda, double q) : mode_(m), lambda_(lambda), q_(q) {}
  RateMode mode_;
  double lambda_;
  double q_;
};

double lambda_from_q(double q);
double q_from_lambda(double lambda);

/// Switches lambda mode to q mode and back.
RateParams reparametrize(const RateParams& p);

std::string to_string(RateMode m);

}  // namespace cplab
