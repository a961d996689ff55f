#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "bloomsample/bloom_filter.hpp"

namespace bloomsample::evalkit {

/// Measured cost of one m-bit intersection (AND + popcount) over the cost of
/// one k-probe membership query. Each of `trials` rounds times a batch of both
/// operations; the median per-operation ratio is returned.
inline double calibrate_cost_ratio(std::uint64_t m, unsigned k, std::size_t trials,
                                   std::uint64_t seed = 0x5eedULL) {
  if (trials == 0) throw std::invalid_argument("calibration needs at least one trial");
  using clock = std::chrono::steady_clock;
  std::mt19937_64 rng(seed);
  auto family = std::make_shared<const HashFamily>(HashFamily::seeded(HashKind::Murmur3Like, k, m, rng()));
  constexpr std::uint64_t kNamespace = std::uint64_t{1} << 40;
  BloomFilter a(family, kNamespace);
  BloomFilter b(family, kNamespace);
  const auto fill = std::max<std::uint64_t>(1, m / (4 * k));
  for (std::uint64_t i = 0; i < fill; ++i) {
    a.insert(rng() % kNamespace);
    b.insert(rng() % kNamespace);
  }

  // Batch sizes keep each timed block well above clock resolution.
  const std::size_t and_batch = std::max<std::size_t>(4, 2'000'000 / (m / 64 + 1));
  constexpr std::size_t kProbeBatch = 20000;
  std::vector<Element> probes(kProbeBatch);
  for (auto& x : probes) x = rng() % kNamespace;

  std::vector<double> ratios;
  ratios.reserve(trials);
  volatile std::uint64_t sink = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    auto start = clock::now();
    std::uint64_t acc = 0;
    for (std::size_t i = 0; i < and_batch; ++i) acc += and_popcount(a, b);
    const double and_ns =
        std::chrono::duration<double, std::nano>(clock::now() - start).count() / and_batch;
    sink = sink + acc;

    start = clock::now();
    acc = 0;
    for (auto x : probes) acc += a.contains(x) ? 1 : 0;
    const double probe_ns =
        std::chrono::duration<double, std::nano>(clock::now() - start).count() / kProbeBatch;
    sink = sink + acc;
    if (probe_ns > 0) ratios.push_back(and_ns / probe_ns);
  }
  if (ratios.empty()) return 0.0;
  std::nth_element(ratios.begin(), ratios.begin() + ratios.size() / 2, ratios.end());
  return std::max(0.0, ratios[ratios.size() / 2]);
}

}  // namespace bloomsample::evalkit
