#include "cplab/rates.hpp"

#include <cmath>
#include <stdexcept>

namespace cplab {

double lambda_from_q(double q) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("q must lie in (0,1)");
  return q / (4.0 * (1.0 - q));
}

double q_from_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be > 0");
  return 4.0 * lambda / (1.0 + 4.0 * lambda);
}

RateParams RateParams::from_lambda(double lambda) {
  return RateParams(RateMode::lambda, lambda, q_from_lambda(lambda));
}

RateParams RateParams::from_q(double q) { return RateParams(RateMode::q, lambda_from_q(q), q); }

RateParams RateParams::with_mode(RateMode m) const {
  RateParams p = *this;
  p.mode_ = m;
  return p;
}

RateParams reparametrize(const RateParams& p) {
  return p.with_mode(p.mode() == RateMode::q ? RateMode::lambda : RateMode::q);
}

std::string to_string(RateMode m) { return m == RateMode::q ? "q" : "lambda"; }

}  // namespace cplab
