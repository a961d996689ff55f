#pragma once

// Reference samplers and reconstructors. DictionaryAttack scans the whole
// namespace; HashInvert enumerates preimages of (un)set bits and needs a
// weakly invertible family.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bloomsample/bloom_filter.hpp"
#include "bloomsample/op_counters.hpp"

namespace bloomsample {

enum class ReconstructionMode : std::uint8_t { SetBits, UnsetBits, Auto };

inline std::string_view to_string(ReconstructionMode mode) {
  switch (mode) {
    case ReconstructionMode::SetBits: return "set";
    case ReconstructionMode::UnsetBits: return "unset";
    case ReconstructionMode::Auto: return "auto";
  }
  return "unknown";
}

inline ReconstructionMode parse_reconstruction_mode(std::string_view name) {
  if (name == "set") return ReconstructionMode::SetBits;
  if (name == "unset") return ReconstructionMode::UnsetBits;
  if (name == "auto") return ReconstructionMode::Auto;
  throw std::invalid_argument("unknown reconstruction mode '" + std::string(name) + "'");
}

/// Auto inverts the unset bits once more than half the filter is set.
inline ReconstructionMode resolve_mode(ReconstructionMode mode, std::uint64_t set_bits, std::uint64_t m) {
  if (mode != ReconstructionMode::Auto) return mode;
  return 2 * set_bits > m ? ReconstructionMode::UnsetBits : ReconstructionMode::SetBits;
}

struct BaselineSample {
  std::optional<Element> element;
  OpCounters counters;
};

struct BaselineReconstruction {
  std::vector<Element> elements;  // ascending
  OpCounters counters;
};

/// Reservoir sample over every positive of [0, M).
template <typename Rng>
BaselineSample da_sample(std::uint64_t namespace_size, const BloomFilter& query, Rng& rng) {
  BaselineSample out;
  std::uint64_t seen = 0;
  for (Element x = 0; x < namespace_size; ++x) {
    if (!query.contains(x)) continue;
    ++seen;
    if (seen == 1) {
      out.element = x;
    } else {
      std::uniform_int_distribution<std::uint64_t> keep(0, seen - 1);
      if (keep(rng) == 0) out.element = x;
    }
  }
  out.counters.membership_queries = namespace_size;
  return out;
}

inline BaselineReconstruction da_reconstruct(std::uint64_t namespace_size, const BloomFilter& query) {
  BaselineReconstruction out;
  for (Element x = 0; x < namespace_size; ++x) {
    if (query.contains(x)) out.elements.push_back(x);
  }
  out.counters.membership_queries = namespace_size;
  return out;
}

/// Picks a uniform set bit s and draws uniformly from the union of the
/// positive preimages of s. An element reached through several hash functions
/// is only counted under the first one.
template <typename Rng>
BaselineSample hi_sample(const BloomFilter& query, std::uint64_t namespace_size, Rng& rng) {
  const auto& family = query.family();
  if (!family.invertible()) {
    throw UnsupportedOperation("hash family '" + std::string(to_string(family.kind())) +
                               "' is not weakly invertible");
  }
  BaselineSample out;
  const auto set_bits = query.popcount();
  if (set_bits == 0) return out;

  std::uniform_int_distribution<std::uint64_t> rank_dist(0, set_bits - 1);
  auto rank = rank_dist(rng);
  std::uint64_t s = 0;
  const auto words = query.words();
  for (std::size_t w = 0; w < words.size(); ++w) {
    const auto count = static_cast<std::uint64_t>(std::popcount(words[w]));
    if (rank >= count) {
      rank -= count;
      continue;
    }
    auto word = words[w];
    for (std::uint64_t r = 0; r < rank; ++r) word &= word - 1;
    s = 64 * w + static_cast<std::uint64_t>(std::countr_zero(word));
    break;
  }

  std::uint64_t candidates = 0;
  for (unsigned i = 0; i < family.size(); ++i) {
    family.for_each_preimage(i, s, namespace_size, [&](Element x) {
      for (unsigned j = 0; j < i; ++j) {
        if (family.hash_unchecked(j, x) == s) return;
      }
      ++out.counters.membership_queries;
      if (!query.contains(x)) return;
      ++candidates;
      std::uniform_int_distribution<std::uint64_t> keep(0, candidates - 1);
      if (keep(rng) == 0) out.element = x;
    });
  }
  return out;
}

/// SetBits: union of positive preimages of every set bit. UnsetBits: the
/// namespace minus every preimage of an unset bit. Both equal da_reconstruct.
inline BaselineReconstruction hi_reconstruct(const BloomFilter& query, std::uint64_t namespace_size,
                                             ReconstructionMode mode = ReconstructionMode::Auto) {
  const auto& family = query.family();
  if (!family.invertible()) {
    throw UnsupportedOperation("hash family '" + std::string(to_string(family.kind())) +
                               "' is not weakly invertible");
  }
  const auto m = query.bit_count();
  BaselineReconstruction out;
  std::vector<bool> marked(namespace_size, false);

  if (resolve_mode(mode, query.popcount(), m) == ReconstructionMode::SetBits) {
    for (std::uint64_t s = 0; s < m; ++s) {
      if (!query.test(s)) continue;
      for (unsigned i = 0; i < family.size(); ++i) {
        family.for_each_preimage(i, s, namespace_size, [&](Element x) {
          if (marked[x]) return;
          marked[x] = true;
          ++out.counters.membership_queries;
          if (query.contains(x)) out.elements.push_back(x);
        });
      }
    }
    std::sort(out.elements.begin(), out.elements.end());
    return out;
  }

  for (std::uint64_t s = 0; s < m; ++s) {
    if (query.test(s)) continue;
    for (unsigned i = 0; i < family.size(); ++i) {
      family.for_each_preimage(i, s, namespace_size, [&](Element x) { marked[x] = true; });
    }
  }
  for (Element x = 0; x < namespace_size; ++x) {
    if (!marked[x]) out.elements.push_back(x);
  }
  return out;
}

}  // namespace bloomsample
