#include "cplab/influence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cplab/rng.hpp"

namespace cplab {

ProductSpace ProductSpace::uniform(int n_vars, double p) {
  ProductSpace s{n_vars, std::vector<int>(static_cast<std::size_t>(n_vars), 0), {p}};
  s.validate();
  return s;
}

ProductSpace ProductSpace::two_class(int n_vars, const std::vector<int>& first, double p1,
                                     double p2) {
  ProductSpace s{n_vars, std::vector<int>(static_cast<std::size_t>(n_vars), 1), {p1, p2}};
  for (int i : first) {
    if (i < 0 || i >= n_vars) throw std::invalid_argument("two_class: variable out of range");
    s.class_of[static_cast<std::size_t>(i)] = 0;
  }
  s.validate();
  return s;
}

void ProductSpace::validate() const {
  if (n_vars < 0 || class_of.size() != static_cast<std::size_t>(n_vars))
    throw std::invalid_argument("product space: class_of must list every variable");
  for (int c : class_of)
    if (c < 0 || static_cast<std::size_t>(c) >= p_of_class.size())
      throw std::invalid_argument("product space: unknown class");
  for (double p : p_of_class)
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("product space: p must lie in (0,1)");
}

namespace {

// Probability weights of all assignments, split into low and high halves so
// the tables stay small.
class Weights {
 public:
  explicit Weights(const ProductSpace& s) : lo_bits_(std::min(s.n_vars, 12)) {
    lo_ = table(s, 0, lo_bits_);
    hi_ = table(s, lo_bits_, s.n_vars);
  }
  double operator()(Assignment a) const {
    return lo_[a & ((1u << lo_bits_) - 1)] * hi_[a >> lo_bits_];
  }

 private:
  static std::vector<double> table(const ProductSpace& s, int from, int to) {
    std::vector<double> t(std::size_t{1} << (to - from), 1.0);
    for (std::size_t a = 0; a < t.size(); ++a)
      for (int i = from; i < to; ++i) {
        const double p = s.p(i);
        t[a] *= (a >> (i - from)) & 1u ? p : 1.0 - p;
      }
    return t;
  }

  int lo_bits_;
  std::vector<double> lo_;
  std::vector<double> hi_;
};

void check_size(const ProductSpace& s) {
  s.validate();
  if (s.n_vars > kMaxExactVars)
    throw std::invalid_argument("exact enumeration limited to " + std::to_string(kMaxExactVars) +
                                " variables");
}

}  // namespace

double event_probability(const ProductSpace& space, const MonotoneEvent& event) {
  check_size(space);
  const Weights w(space);
  double p = 0.0;
  const Assignment end = Assignment{1} << space.n_vars;
  for (Assignment a = 0; a < end; ++a)
    if (event(a)) p += w(a);
  return p;
}

InfluenceReport influence_exact(const ProductSpace& space, const MonotoneEvent& event) {
  check_size(space);
  const int n = space.n_vars;
  const Weights w(space);
  const Assignment end = Assignment{1} << n;
  std::vector<std::uint8_t> value(end);
  InfluenceReport r;
  for (Assignment a = 0; a < end; ++a) {
    value[a] = event(a) ? 1 : 0;
    if (value[a]) r.probability += w(a);
  }
  r.influence.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    const Assignment bit = Assignment{1} << i;
    const double q0 = 1.0 - space.p(i);
    double sum = 0.0;
    for (Assignment a = 0; a < end; ++a)
      if (!(a & bit) && value[a] != value[a | bit]) sum += w(a);
    r.influence[static_cast<std::size_t>(i)] = sum / q0;
  }
  for (double x : r.influence) r.sum_influences += x;
  r.max_influence = n ? *std::max_element(r.influence.begin(), r.influence.end()) : 0.0;
  r.m = 0;
  for (double x : r.influence)
    if (std::abs(x - r.max_influence) <= 1e-12 * std::max(1.0, r.max_influence)) ++r.m;
  r.m = std::max<std::size_t>(r.m, 1);

  std::vector<ClassInfluence> classes(space.p_of_class.size());
  for (std::size_t c = 0; c < classes.size(); ++c) classes[c].key = std::to_string(c);
  for (int i = 0; i < n; ++i) {
    auto& c = classes[static_cast<std::size_t>(space.class_of[static_cast<std::size_t>(i)])];
    ++c.members;
    c.total += r.influence[static_cast<std::size_t>(i)];
  }
  for (auto& c : classes) c.influence = c.members ? c.total / c.members : 0.0;
  r.classes = std::move(classes);
  return r;
}

double russo_derivative_check(const ProductSpace& space, const MonotoneEvent& event, int cls,
                              double h) {
  check_size(space);
  if (cls < 0 || static_cast<std::size_t>(cls) >= space.p_of_class.size())
    throw std::invalid_argument("russo_derivative_check: unknown class");
  const double p = space.p_of_class[static_cast<std::size_t>(cls)];
  if (!(h > 0.0) || p - h <= 0.0 || p + h >= 1.0)
    throw std::invalid_argument("russo_derivative_check: step leaves (0,1)");
  ProductSpace up = space;
  ProductSpace down = space;
  up.p_of_class[static_cast<std::size_t>(cls)] = p + h;
  down.p_of_class[static_cast<std::size_t>(cls)] = p - h;
  const double derivative = (event_probability(up, event) - event_probability(down, event)) / (2.0 * h);
  const InfluenceReport r = influence_exact(space, event);
  return std::abs(derivative - r.classes[static_cast<std::size_t>(cls)].total);
}

std::size_t monotone_violations(int n_vars, const MonotoneEvent& event, std::size_t trials,
                                std::uint64_t seed) {
  if (n_vars < 1 || n_vars > 32) throw std::invalid_argument("monotone_violations: bad size");
  CounterRng rng(seed);
  std::size_t bad = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    Assignment a = 0;
    for (int i = 0; i < n_vars; ++i)
      if (rng.uniform() < 0.5) a |= Assignment{1} << i;
    const Assignment bit = Assignment{1} << rng.below(n_vars);
    if (event(a & ~bit) && !event(a | bit)) ++bad;
  }
  return bad;
}

TalagrandRatios talagrand_ratios(const ProductSpace& space, const InfluenceReport& r) {
  TalagrandRatios t;
  const double p1 = *std::min_element(space.p_of_class.begin(), space.p_of_class.end());
  const double p2 = *std::max_element(space.p_of_class.begin(), space.p_of_class.end());
  const double var = r.probability * (1.0 - r.probability);
  const double scale = var / (p2 * std::log(2.0 / p1));
  if (r.max_influence > 0.0) {
    const double rhs = scale * std::log(1.0 / (p2 * r.max_influence));
    if (rhs > 0.0) t.max_influence_form = r.sum_influences / rhs;
  }
  if (r.m > 1 && var > 0.0) t.multiplicity_form = r.sum_influences / (scale * std::log(static_cast<double>(r.m)));
  return t;
}

}  // namespace cplab
