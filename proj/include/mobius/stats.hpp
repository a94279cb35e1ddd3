#pragma once

#include <boost/math/special_functions/beta.hpp>

#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>

namespace mobius::stats {

inline double mean(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("mean of empty range");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// Sample standard deviation (n - 1 denominator).
inline double stddev(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

// Two-sided tail probability P(|T| >= |t|) for Student's t with `dof` degrees
// of freedom, via the regularized incomplete beta function. Accurate deep
// into the tail, where the p-value thresholds used for support estimation live.
inline double student_t_two_sided(double t, double dof) {
  if (!(dof > 0)) throw std::invalid_argument("degrees of freedom must be positive");
  if (std::isnan(t)) return 1.0;
  if (std::isinf(t)) return 0.0;
  const double x = dof / (dof + t * t);
  return boost::math::ibeta(dof / 2.0, 0.5, x);
}

inline double student_t_cdf(double t, double dof) {
  const double tail = 0.5 * student_t_two_sided(t, dof);
  return t >= 0 ? 1.0 - tail : tail;
}

// P(X <= k) for X ~ Binomial(trials, p), by summing the probability mass.
inline double binomial_cdf(long long k, long long trials, double p) {
  if (k < 0) return 0.0;
  if (k >= trials) return 1.0;
  if (p <= 0.0) return 1.0;
  if (p >= 1.0) return 0.0;
  const double lp = std::log(p), lq = std::log1p(-p);
  double acc = 0.0;
  for (long long j = 0; j <= k; ++j) {
    const double lpmf = std::lgamma(trials + 1.0) - std::lgamma(j + 1.0) - std::lgamma(trials - j + 1.0) +
                        j * lp + (trials - j) * lq;
    acc += std::exp(lpmf);
  }
  return std::min(acc, 1.0);
}

}  // namespace mobius::stats
