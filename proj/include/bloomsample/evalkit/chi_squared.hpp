#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>

namespace bloomsample::evalkit {

inline constexpr double kDefaultSignificance = 0.08;

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
/// Series for x < a + 1, Lentz continued fraction otherwise.
inline double regularized_gamma_q(double a, double x) {
  if (!(a > 0)) throw std::invalid_argument("regularized_gamma_q: a must be positive");
  if (x < 0 || std::isnan(x)) throw std::invalid_argument("regularized_gamma_q: x must be >= 0");
  if (x == 0) return 1.0;
  if (std::isinf(x)) return 0.0;
  const double log_prefix = a * std::log(x) - x - std::lgamma(a);
  constexpr int kMaxIterations = 100000;
  constexpr double kEpsilon = 1e-15;

  if (x < a + 1) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < kMaxIterations; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * kEpsilon) break;
    }
    const double p = sum * std::exp(log_prefix);
    return std::clamp(1.0 - p, 0.0, 1.0);
  }

  constexpr double kTiny = 1e-300;
  double b = x + 1 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIterations; ++i) {
    const double an = -i * (i - a);
    b += 2;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEpsilon) break;
  }
  return std::clamp(std::exp(log_prefix) * h, 0.0, 1.0);
}

/// Upper-tail probability of a chi-squared variable with df degrees of freedom.
inline double chi_squared_survival(double q, double df) {
  if (!(df > 0)) throw std::invalid_argument("degrees of freedom must be positive");
  if (q <= 0) return 1.0;
  return regularized_gamma_q(df / 2.0, q / 2.0);
}

struct ChiSquaredReport {
  double q_statistic = 0.0;
  std::uint64_t degrees_of_freedom = 0;
  double p_value = 1.0;
  double reject_at = kDefaultSignificance;

  bool rejected() const { return p_value <= reject_at; }
};

/// Pearson's test of observed per-element counts against equal expected counts T/n.
inline ChiSquaredReport chi_squared_uniformity(std::span<const std::uint64_t> observed,
                                               double significance = kDefaultSignificance) {
  if (observed.size() < 2) throw std::invalid_argument("chi-squared needs at least two categories");
  double total = 0;
  for (auto o : observed) total += static_cast<double>(o);
  if (!(total > 0)) throw std::invalid_argument("chi-squared needs at least one observation");
  const double expected = total / static_cast<double>(observed.size());
  double q = 0;
  for (auto o : observed) {
    const double diff = static_cast<double>(o) - expected;
    q += diff * diff / expected;
  }
  ChiSquaredReport report;
  report.q_statistic = q;
  report.degrees_of_freedom = observed.size() - 1;
  report.p_value = chi_squared_survival(q, static_cast<double>(report.degrees_of_freedom));
  report.reject_at = significance;
  return report;
}

}  // namespace bloomsample::evalkit
