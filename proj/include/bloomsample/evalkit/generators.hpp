#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "bloomsample/hashing.hpp"

namespace bloomsample::evalkit {

/// n distinct elements of [0, M) drawn uniformly without replacement (Floyd), ascending.
template <typename Rng>
std::vector<Element> gen_uniform(std::uint64_t namespace_size, std::uint64_t n, Rng& rng) {
  if (n > namespace_size) throw std::invalid_argument("cannot draw n > M distinct elements");
  std::vector<Element> out;
  if (n == namespace_size) {
    out.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) out[i] = i;
    return out;
  }
  std::unordered_set<Element> chosen;
  chosen.reserve(n * 2);
  for (auto j = namespace_size - n; j < namespace_size; ++j) {
    std::uniform_int_distribution<std::uint64_t> pick(0, j);
    const auto t = pick(rng);
    chosen.insert(chosen.contains(t) ? j : t);
  }
  out.assign(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end());
  return out;
}

namespace detail {

// Fenwick tree over T with prefix sums and a descent for the first index
// whose prefix exceeds a target.
template <typename T>
class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, T{}) {}

  void rebuild(const std::vector<T>& values) {
    std::fill(tree_.begin(), tree_.end(), T{});
    for (std::size_t i = 0; i < values.size(); ++i) {
      tree_[i + 1] += values[i];
      const auto parent = (i + 1) + ((i + 1) & (~(i + 1) + 1));
      if (parent < tree_.size()) tree_[parent] += tree_[i + 1];
    }
  }

  void add(std::size_t i, T delta) {
    for (++i; i < tree_.size(); i += i & (~i + 1)) tree_[i] += delta;
  }

  // Sum of [0, i).
  T prefix(std::size_t i) const {
    T total{};
    for (; i > 0; i -= i & (~i + 1)) total += tree_[i];
    return total;
  }

  T total() const { return prefix(tree_.size() - 1); }

  // Smallest i with prefix(i + 1) > target, or size() when none.
  std::size_t upper_bound(T target) const {
    std::size_t pos = 0;
    std::size_t step = 1;
    while (step * 2 < tree_.size()) step *= 2;
    for (; step > 0; step /= 2) {
      if (pos + step < tree_.size() && !(target < tree_[pos + step])) {
        pos += step;
        target -= tree_[pos];
      }
    }
    return pos;
  }

  std::size_t size() const { return tree_.size() - 1; }

 private:
  std::vector<T> tree_;
};

}  // namespace detail

/// Sequential draws from an evolving pdf over [0, M) that pulls mass towards
/// already-drawn elements. After drawing s:
///   - pdf(s) moves in equal halves to the nearest live neighbours x < s < y
///     (all of it when only one exists), and s drops out;
///   - every live element loses `percent`% of its mass and the removed total
///     is split equally between x and y.
///
/// Masses are stored as base * scale so the global shrink is O(1); each draw
/// is O(log M).
class ClusteredSetGenerator {
 public:
  ClusteredSetGenerator(std::uint64_t namespace_size, double percent)
      : size_(namespace_size),
        keep_(1.0 - percent / 100.0),
        base_(namespace_size, namespace_size ? 1.0 / static_cast<double>(namespace_size) : 0.0),
        mass_(namespace_size),
        alive_(namespace_size),
        remaining_(namespace_size) {
    if (!(percent >= 0 && percent < 100)) throw std::invalid_argument("percent must lie in [0, 100)");
    mass_.rebuild(base_);
    alive_.rebuild(std::vector<std::int64_t>(namespace_size, 1));
  }

  std::uint64_t remaining() const { return remaining_; }

  double pdf(std::uint64_t i) const { return base_.at(i) * scale_; }
  double total_mass() const { return mass_.total() * scale_; }

  /// Draws with u uniform in [0, 1): the first element whose cumulative pdf exceeds u.
  Element draw_with(double u) {
    if (remaining_ == 0) throw std::logic_error("every element has been drawn");
    auto s = mass_.upper_bound(u * mass_.total());
    if (s >= size_ || base_[s] <= 0) s = nearest_alive(std::min<std::uint64_t>(s, size_ - 1));
    remove_and_spread(s);
    return s;
  }

  template <typename Rng>
  Element draw(Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    return draw_with(unit(rng));
  }

 private:
  std::optional<std::uint64_t> predecessor(std::uint64_t s) const {
    const auto before = alive_.prefix(s);
    if (before == 0) return std::nullopt;
    return alive_.upper_bound(before - 1);
  }

  std::optional<std::uint64_t> successor(std::uint64_t s) const {
    const auto through = alive_.prefix(s + 1);
    if (through == alive_.total()) return std::nullopt;
    return alive_.upper_bound(through);
  }

  // Rounding in the mass prefix sums can land on a drawn slot; fall back to a neighbour.
  std::uint64_t nearest_alive(std::uint64_t s) const {
    if (alive_.prefix(s + 1) - alive_.prefix(s) == 1) return s;
    if (auto y = successor(s)) return *y;
    return *predecessor(s);
  }

  void add_mass(std::uint64_t i, double amount) {
    const double delta = amount / scale_;
    base_[i] += delta;
    mass_.add(i, delta);
  }

  void remove_and_spread(std::uint64_t s) {
    const double moved = pdf(s);
    mass_.add(s, -base_[s]);
    base_[s] = 0.0;
    alive_.add(s, -1);
    --remaining_;

    const auto x = predecessor(s);
    const auto y = successor(s);
    if (!x && !y) return;

    const int parts = (x ? 1 : 0) + (y ? 1 : 0);
    if (x) add_mass(*x, moved / parts);
    if (y) add_mass(*y, moved / parts);

    const double shrunk = total_mass() * (1.0 - keep_);
    scale_ *= keep_;
    if (x) add_mass(*x, shrunk / parts);
    if (y) add_mass(*y, shrunk / parts);
    if (scale_ < 1e-100) renormalize();
  }

  void renormalize() {
    for (auto& b : base_) b *= scale_;
    scale_ = 1.0;
    mass_.rebuild(base_);
  }

  std::uint64_t size_;
  double keep_;
  double scale_ = 1.0;
  std::vector<double> base_;
  detail::Fenwick<double> mass_;
  detail::Fenwick<std::int64_t> alive_;
  std::uint64_t remaining_;
};

/// n distinct elements from ClusteredSetGenerator, ascending.
template <typename Rng>
std::vector<Element> gen_clustered(std::uint64_t namespace_size, std::uint64_t n, Rng& rng,
                                   double percent = 10.0) {
  if (n > namespace_size) throw std::invalid_argument("cannot draw n > M distinct elements");
  ClusteredSetGenerator generator(namespace_size, percent);
  std::vector<Element> out;
  out.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) out.push_back(generator.draw(rng));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace bloomsample::evalkit
