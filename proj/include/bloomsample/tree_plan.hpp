#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

#include "bloomsample/detail/bytes.hpp"
#include "bloomsample/estimate.hpp"

namespace bloomsample {

/// Derived shape of a BloomSampleTree.
///
/// The tree covers [0, padded_size()) with padded_size() = leaf_size * 2^depth >= M;
/// only [0, M) is ever inserted or scanned. Level i holds 2^i nodes of
/// padded_size() / 2^i elements each.
struct TreePlan {
  std::uint64_t namespace_size = 0;  // M
  std::uint64_t bits = 0;            // m
  unsigned hash_count = 0;           // k
  unsigned depth = 0;                // levels below the root
  std::uint64_t leaf_size = 0;       // M_bot
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  double cost_ratio = 0.0;           // i_cost / m_cost used to choose leaf_size
  std::uint64_t reference_set_size = 0;

  std::uint64_t padded_size() const { return leaf_size << depth; }
  std::uint64_t full_node_count() const { return (std::uint64_t{2} << depth) - 1; }
  /// floor(M / 2^depth), the leaf width quoted without padding.
  std::uint64_t nominal_leaf_size() const { return namespace_size >> depth; }
  std::uint64_t span_at_level(unsigned level) const { return padded_size() >> level; }
  /// Nodes at a level whose range starts inside [0, M); the rest is padding.
  std::uint64_t nodes_at_level(unsigned level) const {
    const auto span = span_at_level(level);
    return (namespace_size + span - 1) / span;
  }
  std::uint64_t covering_node_count() const {
    std::uint64_t total = 0;
    for (unsigned level = 0; level <= depth; ++level) total += nodes_at_level(level);
    return total;
  }
  std::uint64_t memory_bits(std::uint64_t node_count) const { return bits * node_count; }

  friend bool operator==(const TreePlan&, const TreePlan&) = default;

  void serialize_into(std::string& out) const {
    detail::put_le(out, namespace_size);
    detail::put_le(out, bits);
    detail::put_le(out, static_cast<std::uint16_t>(hash_count));
    detail::put_le(out, static_cast<std::uint8_t>(depth));
    detail::put_le(out, leaf_size);
    detail::put_f64(out, accuracy);
    detail::put_f64(out, cost_ratio);
    detail::put_le(out, reference_set_size);
  }

  static TreePlan deserialize(detail::ByteReader& in) {
    TreePlan plan;
    plan.namespace_size = in.get_le<std::uint64_t>();
    plan.bits = in.get_le<std::uint64_t>();
    plan.hash_count = in.get_le<std::uint16_t>();
    plan.depth = in.get_le<std::uint8_t>();
    plan.leaf_size = in.get_le<std::uint64_t>();
    plan.accuracy = in.get_f64();
    plan.cost_ratio = in.get_f64();
    plan.reference_set_size = in.get_le<std::uint64_t>();
    if (plan.depth > 62 || plan.leaf_size == 0 || plan.bits < 2 || plan.hash_count == 0 ||
        (plan.leaf_size << plan.depth) < plan.namespace_size) {
      throw FormatError("inconsistent tree plan block");
    }
    return plan;
  }
};

/// acc = n / (n + (M - n) FP), solved for FP.
inline double false_positive_budget(double accuracy, double n, double namespace_size) {
  return n * (1.0 - accuracy) / (accuracy * (namespace_size - n));
}

inline double predicted_accuracy(double m, double k, double n, double namespace_size) {
  return n / (n + (namespace_size - n) * fp_probability(m, k, n));
}

/// Smallest m with fp_probability(m, k, n) <= fp.
inline std::uint64_t bits_for_false_positive(double fp, unsigned k, double n) {
  if (!(fp > 0)) throw std::invalid_argument("false-positive budget must be positive");
  if (fp_probability(1, k, n) <= fp) return 1;
  std::uint64_t lo = 1;  // fails
  std::uint64_t hi = 2;
  while (fp_probability(static_cast<double>(hi), k, n) > fp) {
    lo = hi;
    if (hi > (std::uint64_t{1} << 61)) throw std::invalid_argument("false-positive budget too small");
    hi *= 2;
  }
  while (hi - lo > 1) {
    const auto mid = lo + (hi - lo) / 2;
    if (fp_probability(static_cast<double>(mid), k, n) <= fp) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

/// Largest N with N / log2(N) <= ratio: the widest range a linear membership
/// scan should cover before descending the tree is cheaper. Ratios below the
/// curve's minimum give 1.
inline std::uint64_t leaf_cap_for_cost_ratio(double ratio) {
  const auto cost = [](std::uint64_t n) {
    const double d = static_cast<double>(n);
    return d / std::log2(d);
  };
  if (!(ratio >= cost(3))) return 1;
  std::uint64_t lo = 3;
  std::uint64_t hi = 4;
  while (cost(hi) <= ratio) {
    lo = hi;
    if (hi >= (std::uint64_t{1} << 62)) return hi;
    hi *= 2;
  }
  while (hi - lo > 1) {
    const auto mid = lo + (hi - lo) / 2;
    if (cost(mid) <= ratio) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

/// Tree shape for a fixed filter size m: the shallowest depth whose leaves hold
/// at most leaf_cap_for_cost_ratio(cost_ratio) elements.
inline TreePlan plan_for_bits(std::uint64_t m, std::uint64_t namespace_size, unsigned k,
                              double cost_ratio) {
  if (namespace_size < 1) throw std::invalid_argument("namespace size must be >= 1");
  if (k < 1) throw std::invalid_argument("hash count must be >= 1");
  if (m < 8ULL * k) {
    throw std::invalid_argument("filter size m=" + std::to_string(m) +
                                " is degenerate (below 8k bits)");
  }
  if (!(cost_ratio >= 0) || !std::isfinite(cost_ratio)) {
    throw std::invalid_argument("cost ratio must be finite and non-negative");
  }
  const auto cap = leaf_cap_for_cost_ratio(cost_ratio);
  unsigned depth = 0;
  auto leaf = namespace_size;
  while (leaf > cap && leaf > 1 && depth < 62) {
    ++depth;
    leaf = (namespace_size + (std::uint64_t{1} << depth) - 1) >> depth;
  }

  TreePlan plan;
  plan.namespace_size = namespace_size;
  plan.bits = m;
  plan.hash_count = k;
  plan.depth = depth;
  plan.leaf_size = leaf;
  plan.cost_ratio = cost_ratio;
  return plan;
}

/// Plans m from the accuracy target and the tree shape from a cost ratio that
/// may depend on m (intersections get dearer as filters grow).
inline TreePlan plan_from_accuracy(double accuracy, std::uint64_t reference_set_size,
                                   std::uint64_t namespace_size, unsigned k,
                                   const std::function<double(std::uint64_t)>& cost_ratio_at) {
  if (!(accuracy > 0) || !(accuracy < 1)) {
    throw std::invalid_argument(
        "accuracy must lie strictly between 0 and 1 (use an explicit filter size for 1.0)");
  }
  if (reference_set_size < 1) throw std::invalid_argument("reference set size must be >= 1");
  if (reference_set_size >= namespace_size) {
    throw std::invalid_argument("reference set size must be smaller than the namespace");
  }
  const double n = static_cast<double>(reference_set_size);
  const double fp = false_positive_budget(accuracy, n, static_cast<double>(namespace_size));
  const auto m = fp >= 1.0 ? std::uint64_t{1} : bits_for_false_positive(fp, k, n);

  auto plan = plan_for_bits(m, namespace_size, k, cost_ratio_at(m));
  plan.accuracy = accuracy;
  plan.reference_set_size = reference_set_size;
  return plan;
}

inline TreePlan plan_from_accuracy(double accuracy, std::uint64_t reference_set_size,
                                   std::uint64_t namespace_size, unsigned k, double cost_ratio) {
  return plan_from_accuracy(accuracy, reference_set_size, namespace_size, k,
                            [cost_ratio](std::uint64_t) { return cost_ratio; });
}

/// Cost ratio that grows linearly with the filter size: an AND touches m/64
/// words while a membership probe touches k.
struct LinearCostModel {
  double per_bit = 0.0;
  double operator()(std::uint64_t m) const { return per_bit * static_cast<double>(m); }
};

}  // namespace bloomsample
