#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bloomsample/bloom_filter.hpp"
#include "bloomsample/estimate.hpp"
#include "bloomsample/op_counters.hpp"
#include "bloomsample/tree_plan.hpp"

namespace bloomsample {

/// An estimated intersection below this many elements counts as empty.
inline constexpr double kDefaultThreshold = 0.5;

struct SampleOutcome {
  std::optional<Element> element;
  OpCounters counters;
};

/// Result of a single-pass multi-sample; counters cover the whole pass.
struct MultiSampleOutcome {
  std::vector<Element> elements;
  OpCounters counters;
};

struct ReconstructOutcome {
  std::vector<Element> elements;  // ascending
  OpCounters counters;
};

struct InsertReport {
  std::uint64_t nodes_touched = 0;
  std::uint64_t nodes_created = 0;
};

/// A binary tree of Bloom filters over the namespace: node (level i, index j)
/// stores the (occupied) elements of [j * S_i, (j + 1) * S_i) with
/// S_i = padded_size / 2^i. Every node filter shares the tree's m and hash family.
///
/// A full tree materialises all 2^(depth+1) - 1 nodes. A pruned tree only
/// materialises nodes whose range holds an occupied element and can grow
/// through insert(). Sampling and reconstruction are const and may run
/// concurrently; insert() needs exclusive access.
class BloomSampleTree {
 public:
  static constexpr std::uint32_t kNoChild = std::numeric_limits<std::uint32_t>::max();
  static constexpr std::uint8_t kFormatVersion = 1;

  struct Node {
    unsigned level = 0;
    std::uint64_t index = 0;
    BloomFilter filter;
    std::uint64_t set_bits = 0;
    std::uint32_t child[2] = {kNoChild, kNoChild};
  };

  /// Every node whose range starts below M. Subtrees lying wholly in the
  /// padding hold nothing and are left out.
  static BloomSampleTree build_full(const TreePlan& plan, std::shared_ptr<const HashFamily> family) {
    BloomSampleTree tree(plan, std::move(family));
    const auto total = plan.covering_node_count();
    if (total > std::numeric_limits<std::uint32_t>::max()) {
      throw std::invalid_argument("tree too deep to materialise in full");
    }
    tree.nodes_.reserve(total);
    std::uint64_t level_start = 0;
    for (unsigned level = 0; level <= plan.depth; ++level) {
      const auto width = plan.nodes_at_level(level);
      const auto next_start = level_start + width;
      const auto next_width = level < plan.depth ? plan.nodes_at_level(level + 1) : 0;
      for (std::uint64_t j = 0; j < width; ++j) {
        Node node{level, j, BloomFilter(tree.family_, plan.namespace_size), 0, {kNoChild, kNoChild}};
        for (int side = 0; side < 2; ++side) {
          if (2 * j + side < next_width) node.child[side] = static_cast<std::uint32_t>(next_start + 2 * j + side);
        }
        tree.nodes_.push_back(std::move(node));
      }
      level_start = next_start;
    }
    // Leaves by insertion, internal nodes as the union of their children.
    const auto first_leaf = total - plan.nodes_at_level(plan.depth);
    for (auto id = first_leaf; id < total; ++id) {
      auto& leaf = tree.nodes_[id];
      const auto [lo, hi] = tree.scan_range(leaf);
      for (auto x = lo; x < hi; ++x) leaf.filter.insert(x);
    }
    for (auto id = first_leaf; id-- > 0;) {
      auto& node = tree.nodes_[id];
      node.filter = tree.nodes_[node.child[0]].filter;
      if (node.child[1] != kNoChild) node.filter |= tree.nodes_[node.child[1]].filter;
    }
    for (auto& node : tree.nodes_) node.set_bits = node.filter.popcount();
    return tree;
  }

  static BloomSampleTree build_full(const TreePlan& plan, const HashFamily& family) {
    return build_full(plan, std::make_shared<const HashFamily>(family));
  }

  /// Breadth-first construction that materialises a node only when its range
  /// intersects the occupied set.
  template <typename Range>
  static BloomSampleTree build_pruned(const TreePlan& plan, std::shared_ptr<const HashFamily> family,
                                      const Range& occupied) {
    BloomSampleTree tree(plan, std::move(family));
    std::vector<Element> sorted(std::begin(occupied), std::end(occupied));
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    if (!sorted.empty() && sorted.back() >= plan.namespace_size) {
      throw std::out_of_range("occupied element outside the namespace");
    }

    struct Pending {
      unsigned level;
      std::uint64_t index;
      std::uint32_t parent;
      int side;
    };
    std::deque<Pending> queue{{0, 0, kNoChild, 0}};
    while (!queue.empty()) {
      const auto item = queue.front();
      queue.pop_front();
      const auto span = plan.span_at_level(item.level);
      const auto lo = item.index * span;
      const auto first = std::lower_bound(sorted.begin(), sorted.end(), lo);
      const auto last = std::lower_bound(first, sorted.end(), lo + span);
      if (first == last) continue;

      const auto id = static_cast<std::uint32_t>(tree.nodes_.size());
      Node node{item.level, item.index, BloomFilter(tree.family_, plan.namespace_size), 0,
                {kNoChild, kNoChild}};
      for (auto it = first; it != last; ++it) node.filter.insert(*it);
      node.set_bits = node.filter.popcount();
      tree.nodes_.push_back(std::move(node));
      if (item.parent != kNoChild) tree.nodes_[item.parent].child[item.side] = id;
      if (item.level < plan.depth) {
        queue.push_back({item.level + 1, 2 * item.index, id, 0});
        queue.push_back({item.level + 1, 2 * item.index + 1, id, 1});
      }
    }
    return tree;
  }

  template <typename Range>
  static BloomSampleTree build_pruned(const TreePlan& plan, const HashFamily& family,
                                      const Range& occupied) {
    return build_pruned(plan, std::make_shared<const HashFamily>(family), occupied);
  }

  /// Adds x to every node on its root-to-leaf path, creating missing nodes.
  InsertReport insert(Element x) {
    if (x >= plan_.namespace_size) {
      throw std::out_of_range("element " + std::to_string(x) + " outside namespace");
    }
    InsertReport report;
    if (nodes_.empty()) {
      nodes_.push_back(Node{0, 0, BloomFilter(family_, plan_.namespace_size), 0, {kNoChild, kNoChild}});
      ++report.nodes_created;
    }
    std::uint32_t id = 0;
    for (unsigned level = 0;; ++level) {
      auto& node = nodes_[id];
      node.filter.insert(x);
      node.set_bits = node.filter.popcount();
      ++report.nodes_touched;
      if (level == plan_.depth) break;
      const int side = static_cast<int>((x / plan_.span_at_level(level + 1)) & 1U);
      if (node.child[side] == kNoChild) {
        const auto child_id = static_cast<std::uint32_t>(nodes_.size());
        const auto child_index = 2 * node.index + static_cast<std::uint64_t>(side);
        nodes_[id].child[side] = child_id;
        nodes_.push_back(Node{level + 1, child_index, BloomFilter(family_, plan_.namespace_size), 0,
                              {kNoChild, kNoChild}});
        ++report.nodes_created;
      }
      id = nodes_[id].child[side];
    }
    return report;
  }

  /// One draw following the biased-coin descent with backtracking. A child is
  /// empty when its AND with the query has no set bit or its estimated
  /// intersection is below `threshold`.
  template <typename Rng>
  SampleOutcome sample(const BloomFilter& query, Rng& rng, double threshold = kDefaultThreshold) const {
    require_compatible(query);
    SampleOutcome outcome;
    if (nodes_.empty()) return outcome;
    const QueryView view{query, query.popcount(), threshold};
    outcome.element = sample_from(0, view, rng, outcome.counters);
    return outcome;
  }

  /// r draws in one pass: each live path flips its own coin at every node,
  /// estimates and leaf scans are shared. Without replacement, paths that find
  /// a leaf exhausted backtrack like failed draws.
  template <typename Rng>
  MultiSampleOutcome sample_many(const BloomFilter& query, std::size_t r, bool with_replacement,
                                 Rng& rng, double threshold = kDefaultThreshold) const {
    require_compatible(query);
    if (r < 1) throw std::invalid_argument("sample_many needs r >= 1");
    MultiSampleOutcome outcome;
    if (nodes_.empty()) return outcome;
    MultiPass<Rng> pass{*this, QueryView{query, query.popcount(), threshold}, rng, with_replacement,
                        outcome};
    pass.visit(0, r);
    return outcome;
  }

  /// Union of the positive leaf scans reachable through non-empty intersections.
  ReconstructOutcome reconstruct(const BloomFilter& query, double threshold = kDefaultThreshold) const {
    require_compatible(query);
    ReconstructOutcome outcome;
    if (nodes_.empty()) return outcome;
    const QueryView view{query, query.popcount(), threshold};
    collect(0, view, outcome);
    return outcome;
  }

  /// Query filter for `elements` built with the tree's own family and namespace.
  template <typename Range>
  BloomFilter make_filter(const Range& elements) const {
    return BloomFilter::from_elements(family_, plan_.namespace_size, elements);
  }

  const TreePlan& plan() const { return plan_; }
  const HashFamily& family() const { return *family_; }
  const std::shared_ptr<const HashFamily>& shared_family() const { return family_; }
  std::size_t node_count() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  std::span<const Node> nodes() const { return nodes_; }
  std::uint64_t memory_bits() const { return plan_.memory_bits(nodes_.size()); }
  bool is_leaf(const Node& node) const { return node.level == plan_.depth; }

  /// [lo, hi) of the namespace covered by a node, clipped to [0, M).
  std::pair<Element, Element> scan_range(const Node& node) const {
    const auto span = plan_.span_at_level(node.level);
    const auto lo = node.index * span;
    return {std::min(lo, plan_.namespace_size), std::min(lo + span, plan_.namespace_size)};
  }

  /// Node ids in breadth-first (level, index) order, independent of insertion history.
  std::vector<std::uint32_t> breadth_first_order() const {
    std::vector<std::uint32_t> order;
    if (nodes_.empty()) return order;
    order.reserve(nodes_.size());
    order.push_back(0);
    for (std::size_t i = 0; i < order.size(); ++i) {
      for (auto c : nodes_[order[i]].child) {
        if (c != kNoChild) order.push_back(c);
      }
    }
    return order;
  }

  /// "BSTR", version, plan block, family descriptor, node count, then nodes in
  /// breadth-first order as (level u8, index u64, child bits u8, BFLT filter).
  std::string serialize() const {
    std::string out;
    out.append("BSTR");
    detail::put_le(out, kFormatVersion);
    plan_.serialize_into(out);
    family_->serialize_into(out);
    detail::put_le(out, static_cast<std::uint64_t>(nodes_.size()));
    for (auto id : breadth_first_order()) {
      const auto& node = nodes_[id];
      detail::put_le(out, static_cast<std::uint8_t>(node.level));
      detail::put_le(out, node.index);
      const auto bits = static_cast<std::uint8_t>((node.child[0] != kNoChild ? 1U : 0U) |
                                                  (node.child[1] != kNoChild ? 2U : 0U));
      detail::put_le(out, bits);
      node.filter.serialize_into(out);
    }
    return out;
  }

  static BloomSampleTree deserialize(std::string_view bytes) {
    detail::ByteReader in(bytes);
    in.expect_magic("BSTR");
    const auto version = in.get_le<std::uint8_t>();
    if (version != kFormatVersion) {
      throw FormatError("unsupported tree format version " + std::to_string(version));
    }
    const auto plan = TreePlan::deserialize(in);
    auto family = std::make_shared<const HashFamily>(HashFamily::deserialize(in));
    if (family->range() != plan.bits || family->size() != plan.hash_count) {
      throw FormatError("tree plan disagrees with its hash family");
    }
    BloomSampleTree tree(plan, family);
    const auto count = in.get_le<std::uint64_t>();
    if (count > plan.covering_node_count()) throw FormatError("node count exceeds tree capacity");

    struct Slot {
      std::uint32_t parent;
      int side;
      unsigned level;
      std::uint64_t index;
    };
    std::deque<Slot> expected;
    if (count > 0) expected.push_back({kNoChild, 0, 0, 0});
    tree.nodes_.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      const auto level = in.get_le<std::uint8_t>();
      const auto index = in.get_le<std::uint64_t>();
      const auto bits = in.get_le<std::uint8_t>();
      if (expected.empty()) throw FormatError("node without a parent slot");
      const auto slot = expected.front();
      expected.pop_front();
      if (slot.level != level || slot.index != index || bits > 3 ||
          (level == plan.depth && bits != 0) || index * plan.span_at_level(level) >= plan.namespace_size) {
        throw FormatError("nodes are not in breadth-first order");
      }
      auto filter = BloomFilter::deserialize(in, family);
      if (filter.shared_family() != family || filter.namespace_size() != plan.namespace_size) {
        throw FormatError("node filter disagrees with the tree parameters");
      }
      const auto id = static_cast<std::uint32_t>(tree.nodes_.size());
      const auto set_bits = filter.popcount();
      tree.nodes_.push_back(Node{level, index, std::move(filter), set_bits, {kNoChild, kNoChild}});
      if (slot.parent != kNoChild) tree.nodes_[slot.parent].child[slot.side] = id;
      for (int side = 0; side < 2; ++side) {
        if (bits & (1U << side)) {
          expected.push_back({id, side, level + 1U, 2 * index + static_cast<std::uint64_t>(side)});
        }
      }
    }
    if (!expected.empty()) throw FormatError("missing child nodes");
    if (!in.at_end()) throw FormatError("trailing bytes after tree");
    return tree;
  }

  friend bool operator==(const BloomSampleTree& lhs, const BloomSampleTree& rhs) {
    // Byte comparison so that an unset (NaN) accuracy compares equal to itself.
    std::string plan_a;
    std::string plan_b;
    lhs.plan_.serialize_into(plan_a);
    rhs.plan_.serialize_into(plan_b);
    if (plan_a != plan_b) return false;
    if (!(*lhs.family_ == *rhs.family_) || lhs.nodes_.size() != rhs.nodes_.size()) return false;
    const auto a = lhs.breadth_first_order();
    const auto b = rhs.breadth_first_order();
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto& x = lhs.nodes_[a[i]];
      const auto& y = rhs.nodes_[b[i]];
      const bool same_shape = x.level == y.level && x.index == y.index &&
                              (x.child[0] == kNoChild) == (y.child[0] == kNoChild) &&
                              (x.child[1] == kNoChild) == (y.child[1] == kNoChild);
      if (!same_shape || !(x.filter == y.filter)) return false;
    }
    return true;
  }

 private:
  BloomSampleTree(const TreePlan& plan, std::shared_ptr<const HashFamily> family)
      : plan_(plan), family_(std::move(family)) {
    if (!family_) throw std::invalid_argument("null hash family");
    if (family_->range() != plan_.bits || family_->size() != plan_.hash_count) {
      throw std::invalid_argument("hash family does not match the tree plan (m or k differ)");
    }
    if (plan_.padded_size() < plan_.namespace_size) throw std::invalid_argument("plan does not cover M");
  }

  struct QueryView {
    const BloomFilter& filter;
    std::uint64_t set_bits;
    double threshold;
  };

  struct ChildEstimate {
    bool live = false;
    double size = 0.0;
  };

  void require_compatible(const BloomFilter& query) const {
    if (!(query.shared_family() == family_ || query.family() == *family_)) {
      throw IncompatibleFilters("query filter does not share the tree's m and hash family");
    }
  }

  ChildEstimate estimate_child(std::uint32_t id, const QueryView& q, OpCounters& counters) const {
    if (id == kNoChild) return {};
    const auto& child = nodes_[id];
    ++counters.intersections;
    const auto t_and = and_popcount(child.filter, q.filter);
    const double size =
        intersection_from_bits(plan_.bits, plan_.hash_count, child.set_bits, q.set_bits, t_and);
    return {t_and > 0 && !(size < q.threshold), size};
  }

  template <typename Rng>
  static bool choose_left(const ChildEstimate& left, const ChildEstimate& right, double threshold,
                          Rng& rng) {
    const bool inf_l = std::isinf(left.size);
    const bool inf_r = std::isinf(right.size);
    if (inf_l != inf_r) return inf_l;
    if (!inf_l) {
      const double total = left.size + right.size;
      if (total <= 0) return true;
      if (left.size == threshold && right.size == threshold) return true;
      std::uniform_real_distribution<double> coin(0.0, 1.0);
      return coin(rng) < left.size / total;
    }
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    return coin(rng) < 0.5;
  }

  std::vector<Element> scan_leaf(const Node& leaf, const BloomFilter& query, OpCounters& counters) const {
    const auto [lo, hi] = scan_range(leaf);
    std::vector<Element> positives;
    for (auto x = lo; x < hi; ++x) {
      if (query.contains(x)) positives.push_back(x);
    }
    counters.membership_queries += hi - lo;
    ++counters.leaves_scanned;
    return positives;
  }

  template <typename Rng>
  std::optional<Element> sample_from(std::uint32_t id, const QueryView& q, Rng& rng,
                                     OpCounters& counters) const {
    const auto& node = nodes_[id];
    ++counters.nodes_visited;
    if (is_leaf(node)) {
      const auto positives = scan_leaf(node, q.filter, counters);
      if (positives.empty()) return std::nullopt;
      std::uniform_int_distribution<std::size_t> pick(0, positives.size() - 1);
      return positives[pick(rng)];
    }
    const auto left = estimate_child(node.child[0], q, counters);
    const auto right = estimate_child(node.child[1], q, counters);
    if (!left.live && !right.live) return std::nullopt;
    if (!right.live) return sample_from(node.child[0], q, rng, counters);
    if (!left.live) return sample_from(node.child[1], q, rng, counters);

    const bool go_left = choose_left(left, right, q.threshold, rng);
    const auto first = node.child[go_left ? 0 : 1];
    const auto second = node.child[go_left ? 1 : 0];
    if (auto found = sample_from(first, q, rng, counters)) return found;
    return sample_from(second, q, rng, counters);
  }

  template <typename Rng>
  struct MultiPass {
    const BloomSampleTree& tree;
    QueryView query;
    Rng& rng;
    bool with_replacement;
    MultiSampleOutcome& out;
    std::unordered_map<std::uint32_t, std::pair<ChildEstimate, ChildEstimate>> estimates{};
    std::unordered_map<std::uint32_t, std::vector<Element>> leaves{};

    std::size_t visit(std::uint32_t id, std::size_t count) {
      if (count == 0) return 0;
      const auto& node = tree.nodes_[id];
      const bool first_visit = !estimates.contains(id) && !leaves.contains(id);
      if (first_visit) ++out.counters.nodes_visited;

      if (tree.is_leaf(node)) {
        auto [it, scanned] = leaves.try_emplace(id);
        if (scanned) it->second = tree.scan_leaf(node, query.filter, out.counters);
        auto& pool = it->second;
        if (pool.empty()) return 0;
        if (with_replacement) {
          std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
          for (std::size_t i = 0; i < count; ++i) out.elements.push_back(pool[pick(rng)]);
          return count;
        }
        const auto take = std::min(count, pool.size());
        for (std::size_t i = 0; i < take; ++i) {
          std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
          const auto j = pick(rng);
          out.elements.push_back(pool[j]);
          pool[j] = pool.back();
          pool.pop_back();
        }
        return take;
      }

      auto [it, fresh] = estimates.try_emplace(id);
      if (fresh) {
        it->second.first = tree.estimate_child(node.child[0], query, out.counters);
        it->second.second = tree.estimate_child(node.child[1], query, out.counters);
      }
      const auto [left, right] = it->second;
      if (!left.live && !right.live) return 0;
      if (!right.live) return visit(node.child[0], count);
      if (!left.live) return visit(node.child[1], count);

      std::size_t to_left = 0;
      for (std::size_t i = 0; i < count; ++i) {
        if (choose_left(left, right, query.threshold, rng)) ++to_left;
      }
      const auto to_right = count - to_left;
      const auto got_left = visit(node.child[0], to_left);
      const auto failed_left = to_left - got_left;
      const auto got_right = visit(node.child[1], to_right + failed_left);
      const auto failed_right = to_right + failed_left - got_right;
      auto got = got_left + got_right;
      // Paths that started right and failed there still owe a try on the left,
      // unless the left subtree already came up short.
      if (failed_left == 0 && failed_right > 0) {
        got += visit(node.child[0], std::min(failed_right, to_right));
      }
      return got;
    }
  };

  void collect(std::uint32_t id, const QueryView& q, ReconstructOutcome& out) const {
    const auto& node = nodes_[id];
    ++out.counters.nodes_visited;
    if (is_leaf(node)) {
      auto positives = scan_leaf(node, q.filter, out.counters);
      out.elements.insert(out.elements.end(), positives.begin(), positives.end());
      return;
    }
    const auto left = estimate_child(node.child[0], q, out.counters);
    const auto right = estimate_child(node.child[1], q, out.counters);
    if (left.live) collect(node.child[0], q, out);
    if (right.live) collect(node.child[1], q, out);
  }

  TreePlan plan_;
  std::shared_ptr<const HashFamily> family_;
  std::vector<Node> nodes_;
};

}  // namespace bloomsample
