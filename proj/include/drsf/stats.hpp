#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace drsf {

// Scalar special functions backing the chi-square reference distribution.
// Self-contained series / continued-fraction evaluation of the regularized
// incomplete gamma function; absolute error well below 1e-10 over the range
// used here.

namespace detail {

// Lower regularized gamma P(a, x) by power series; valid for x < a + 1.
template <typename Scalar>
Scalar gamma_p_series(Scalar a, Scalar x) {
  const Scalar log_gamma_a = std::lgamma(a);
  Scalar ap = a;
  Scalar sum = Scalar(1) / a;
  Scalar term = sum;
  for (int i = 0; i < 500; ++i) {
    ap += Scalar(1);
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * Scalar(1e-16)) break;
  }
  return sum * std::exp(-x + a * std::log(x) - log_gamma_a);
}

// Upper regularized gamma Q(a, x) by modified Lentz continued fraction;
// valid for x >= a + 1.
template <typename Scalar>
Scalar gamma_q_continued_fraction(Scalar a, Scalar x) {
  const Scalar log_gamma_a = std::lgamma(a);
  const Scalar tiny = std::numeric_limits<Scalar>::min() / Scalar(1e-30);
  Scalar b = x + Scalar(1) - a;
  Scalar c = Scalar(1) / tiny;
  Scalar d = Scalar(1) / b;
  Scalar h = d;
  for (int i = 1; i <= 500; ++i) {
    const Scalar an = -Scalar(i) * (Scalar(i) - a);
    b += Scalar(2);
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = Scalar(1) / d;
    const Scalar delta = d * c;
    h *= delta;
    if (std::abs(delta - Scalar(1)) < Scalar(1e-16)) break;
  }
  return std::exp(-x + a * std::log(x) - log_gamma_a) * h;
}

}  // namespace detail

// Upper regularized incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
template <typename Scalar>
Scalar gamma_q(Scalar a, Scalar x) {
  if (!(a > Scalar(0))) throw std::invalid_argument("gamma_q: a must be positive");
  if (!(x >= Scalar(0))) throw std::invalid_argument("gamma_q: x must be non-negative");
  if (x == Scalar(0)) return Scalar(1);
  if (x < a + Scalar(1)) return Scalar(1) - detail::gamma_p_series(a, x);
  return detail::gamma_q_continued_fraction(a, x);
}

// Chi-square survival function: P(X > x) for X ~ chi^2(df).
template <typename Scalar>
Scalar chi2_sf(Scalar x, int df) {
  if (df <= 0) throw std::invalid_argument("chi2_sf: df must be positive");
  if (!(x >= Scalar(0))) throw std::invalid_argument("chi2_sf: x must be non-negative");
  return gamma_q(Scalar(df) / Scalar(2), x / Scalar(2));
}

// Standard normal CDF.
template <typename Scalar>
Scalar normal_cdf(Scalar x) {
  return Scalar(0.5) * std::erfc(-x * Scalar(0.7071067811865475244));
}

}  // namespace drsf
