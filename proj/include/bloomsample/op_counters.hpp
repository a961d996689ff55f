#pragma once

#include <cstdint>

namespace bloomsample {

/// Per-run operation tallies; the main cost metric for comparing algorithms.
struct OpCounters {
  std::uint64_t intersections = 0;
  std::uint64_t membership_queries = 0;
  std::uint64_t nodes_visited = 0;
  std::uint64_t leaves_scanned = 0;

  OpCounters& operator+=(const OpCounters& other) {
    intersections += other.intersections;
    membership_queries += other.membership_queries;
    nodes_visited += other.nodes_visited;
    leaves_scanned += other.leaves_scanned;
    return *this;
  }

  friend bool operator==(const OpCounters&, const OpCounters&) = default;
};

}  // namespace bloomsample
