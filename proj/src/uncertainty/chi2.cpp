#include <cmath>
#include <limits>

#include "tubeplan/uncertainty.hpp"

namespace tubeplan {

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxTerms = 1000;

double gamma_p_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int n = 0; n < kMaxTerms; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz evaluation of the continued fraction for Q(a, x).
double gamma_q_continued_fraction(double a, double x) {
  constexpr double tiny = std::numeric_limits<double>::min() / kEps;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxTerms; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw InvalidInput("incomplete gamma: a must be positive");
  if (x <= 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_continued_fraction(a, x);
}

double chi2_cdf(double x, int dof) {
  if (dof <= 0) throw InvalidInput("chi-squared: dof must be positive");
  return regularized_gamma_p(0.5 * dof, 0.5 * x);
}

double chi2_quantile(double beta, int dof) {
  if (!(beta > 0.0 && beta < 1.0)) throw InvalidInput("chi2_quantile: beta must lie in (0, 1)");
  double lo = 0.0;
  double hi = static_cast<double>(dof);
  while (chi2_cdf(hi, dof) < beta) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (chi2_cdf(mid, dof) < beta) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  // Return whichever endpoint sits closer to beta in CDF terms.
  return std::abs(chi2_cdf(lo, dof) - beta) <= std::abs(chi2_cdf(hi, dof) - beta) ? lo : hi;
}

}  // namespace tubeplan
