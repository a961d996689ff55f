#pragma once

// Closed-form estimators and diagnostic bounds over Bloom filter bit counts.
//
// Logarithms inside the population estimator and the uniformity epsilon are
// natural; logarithms of tree heights (M / M_bot) are base 2.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "bloomsample/bloom_filter.hpp"

namespace bloomsample {

inline constexpr double kInfiniteEstimate = std::numeric_limits<double>::infinity();

/// (1 - e^(-kn/m))^k
inline double fp_probability(double m, double k, double n) {
  if (m < 1) throw std::invalid_argument("fp_probability: m must be >= 1");
  if (n <= 0) return 0.0;
  return std::pow(-std::expm1(-k * n / m), k);
}

/// Population estimate from the number of set bits t of an m-bit filter with k hashes:
/// ln(z/m) / (k ln(1 - 1/m)) with z = m - t. Returns 0 for an empty filter and
/// +infinity for a saturated one.
inline double population_from_bits(std::uint64_t m, unsigned k, std::uint64_t set_bits) {
  if (set_bits == 0) return 0.0;
  if (set_bits >= m) return kInfiniteEstimate;
  const double zeros = static_cast<double>(m - set_bits);
  const double md = static_cast<double>(m);
  const double value = std::log(zeros / md) / (k * std::log1p(-1.0 / md));
  return std::max(0.0, value);
}

inline double population_estimate(const BloomFilter& filter) {
  return population_from_bits(filter.bit_count(), filter.hash_count(), filter.popcount());
}

/// Estimated |A intersect B| from t1 = |bits(A)|, t2 = |bits(B)| and t_and = |bits(A) & bits(B)|:
///
///   ( ln(m - (t_and*m - t1*t2) / (m - t1 - t2 + t_and)) - ln m ) / (k ln(1 - 1/m))
///
/// t_and = 0 gives 0. When one filter is saturated (t = m) the expression is
/// 0/0; its limit is the population estimate of the other filter, and two
/// saturated filters give +infinity. A saturated union with neither side
/// saturated, or a negative raw value, clamps to 0.
inline double intersection_from_bits(std::uint64_t m, unsigned k, std::uint64_t t1,
                                     std::uint64_t t2, std::uint64_t t_and) {
  if (t_and == 0) return 0.0;
  if (t1 >= m && t2 >= m) return kInfiniteEstimate;
  if (t1 >= m) return population_from_bits(m, k, t2);
  if (t2 >= m) return population_from_bits(m, k, t1);

  const double md = static_cast<double>(m);
  const double a = static_cast<double>(t1);
  const double b = static_cast<double>(t2);
  const double both = static_cast<double>(t_and);
  const double zero_in_both = md - a - b + both;
  if (zero_in_both <= 0) return 0.0;

  const double ratio = (both * md - a * b) / zero_in_both;
  const double value = (std::log(md - ratio) - std::log(md)) / (k * std::log1p(-1.0 / md));
  if (!std::isfinite(value) || value < 0) return 0.0;
  return value;
}

inline double intersection_estimate(const BloomFilter& lhs, const BloomFilter& rhs) {
  const auto t_and = and_popcount(lhs, rhs);
  return intersection_from_bits(lhs.bit_count(), lhs.hash_count(), lhs.popcount(), rhs.popcount(),
                                t_and);
}

/// Probability that filters of two disjoint sets of sizes s1, s2 share a set bit:
/// 1 - (1 - 1/m)^(k^2 s1 s2).
inline double fso_probability(double m, double k, double s1, double s2) {
  if (m < 2) throw std::invalid_argument("fso_probability: m must be >= 2");
  const double exponent = k * k * s1 * s2;
  if (exponent <= 0) return 0.0;
  return -std::expm1(exponent * std::log1p(-1.0 / m));
}

/// epsilon(m) = sqrt(2 n k (ln m + ln ln m + ln n)) / m.
inline double uniformity_epsilon(double m, double n, double k) {
  if (m < 2 || n < 2) throw std::invalid_argument("uniformity_epsilon: m and n must be >= 2");
  const double logs = std::log(m) + std::log(std::log(m)) + std::log(n);
  return std::sqrt(2.0 * n * k * logs) / m;
}

/// f(m) = 2 epsilon(m) log2(M / M_bot); the uniformity guarantee wants this small.
inline double uniformity_condition(double namespace_size, double leaf_size, double m, double n,
                                   double k) {
  return 2.0 * uniformity_epsilon(m, n, k) * std::log2(namespace_size / leaf_size);
}

/// alpha_S(d) = 1 - (1 - 1/m)^(k^2 n M / 2^d): false-overlap chance of a depth-d subtree.
inline double subtree_overlap_probability(double namespace_size, double m, double k, double n,
                                          double depth) {
  return fso_probability(m, k, n, namespace_size / std::exp2(depth));
}

/// log2(M / M_bot) + M k^2 n / m
inline double sample_visit_bound(double namespace_size, double leaf_size, double m, double k,
                                 double n) {
  return std::log2(namespace_size / leaf_size) + namespace_size * k * k * n / m;
}

/// n (log2(M / M_bot) + M_bot k^2 / m)
inline double reconstruct_visit_bound(double namespace_size, double leaf_size, double m, double k,
                                      double n) {
  return n * (std::log2(namespace_size / leaf_size) + leaf_size * k * k / m);
}

/// d* = log2(M k^2 n / (m ln 2)); below d* a false branch dies out in expectation.
inline double critical_depth(double namespace_size, double m, double k, double n) {
  return std::log2(namespace_size * k * k * n / (m * std::log(2.0)));
}

}  // namespace bloomsample
