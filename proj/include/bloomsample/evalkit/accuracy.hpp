#pragma once

#include <algorithm>
#include <span>
#include <stdexcept>

#include "bloomsample/hashing.hpp"

namespace bloomsample::evalkit {

/// Fraction of samples that belong to `true_set` (which must be sorted ascending).
inline double measured_accuracy(std::span<const Element> samples, std::span<const Element> true_set) {
  if (samples.empty()) throw std::invalid_argument("measured_accuracy needs at least one sample");
  std::size_t hits = 0;
  for (auto x : samples) {
    if (std::binary_search(true_set.begin(), true_set.end(), x)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

}  // namespace bloomsample::evalkit
