#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <vector>

#include "bloomsample/baselines.hpp"
#include "bloomsample/evalkit/generators.hpp"
#include "bloomsample/sample_tree.hpp"

using namespace bloomsample;

namespace {

TreePlan manual_plan(std::uint64_t M, std::uint64_t m, unsigned k, unsigned depth) {
  TreePlan plan;
  plan.namespace_size = M;
  plan.bits = m;
  plan.hash_count = k;
  plan.depth = depth;
  plan.leaf_size = (M + (1ULL << depth) - 1) >> depth;
  return plan;
}

std::shared_ptr<const HashFamily> linear_family(const TreePlan& plan, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return std::make_shared<const HashFamily>(HashFamily::random_simple_linear(plan.hash_count, plan.bits, rng));
}

std::shared_ptr<const HashFamily> murmur_family(const TreePlan& plan, std::uint64_t seed) {
  return std::make_shared<const HashFamily>(
      HashFamily::seeded(HashKind::Murmur3Like, plan.hash_count, plan.bits, seed));
}

std::vector<Element> iota_range(Element lo, Element hi) {
  std::vector<Element> v;
  for (auto x = lo; x < hi; ++x) v.push_back(x);
  return v;
}

}  // namespace

TEST(BuildFull, FigureOneStructure) {
  const auto plan = manual_plan(16, 101, 3, 2);
  const auto tree = BloomSampleTree::build_full(plan, linear_family(plan, 1));
  ASSERT_EQ(tree.node_count(), 7u);
  std::vector<std::pair<Element, Element>> leaves;
  for (const auto& node : tree.nodes()) {
    if (tree.is_leaf(node)) leaves.push_back(tree.scan_range(node));
  }
  const std::vector<std::pair<Element, Element>> expected{{0, 4}, {4, 8}, {8, 12}, {12, 16}};
  EXPECT_EQ(leaves, expected);
  EXPECT_EQ(tree.nodes()[0].child[0], 1u);
  EXPECT_EQ(tree.nodes()[0].child[1], 2u);
}

TEST(BuildFull, ZeroDepthTreeIsSingleNode) {
  const auto plan = manual_plan(50, 200, 3, 0);
  const auto tree = BloomSampleTree::build_full(plan, linear_family(plan, 2));
  EXPECT_EQ(tree.node_count(), 1u);
  EXPECT_TRUE(tree.is_leaf(tree.nodes()[0]));
}

TEST(BuildFull, EveryElementIsInItsCoveringNodes) {
  const auto plan = manual_plan(1000, 997, 3, 4);
  const auto tree = BloomSampleTree::build_full(plan, murmur_family(plan, 3));
  for (const auto& node : tree.nodes()) {
    const auto [lo, hi] = tree.scan_range(node);
    for (auto x = lo; x < hi; ++x) ASSERT_TRUE(node.filter.contains(x));
    EXPECT_EQ(node.filter.inserted_count(), hi - lo);
  }
}

TEST(BuildFull, InternalNodesEqualDirectInsertion) {
  const auto plan = manual_plan(777, 503, 2, 3);
  const auto family = murmur_family(plan, 4);
  const auto tree = BloomSampleTree::build_full(plan, family);
  for (const auto& node : tree.nodes()) {
    const auto [lo, hi] = tree.scan_range(node);
    EXPECT_TRUE(node.filter.same_bits(BloomFilter::from_elements(family, 777, iota_range(lo, hi))));
  }
}

TEST(BuildFull, RejectsMismatchedFamily) {
  const auto plan = manual_plan(100, 64, 3, 2);
  auto wrong_m = std::make_shared<const HashFamily>(HashFamily::seeded(HashKind::Murmur3Like, 3, 65, 1));
  auto wrong_k = std::make_shared<const HashFamily>(HashFamily::seeded(HashKind::Murmur3Like, 2, 64, 1));
  EXPECT_THROW(BloomSampleTree::build_full(plan, wrong_m), std::invalid_argument);
  EXPECT_THROW(BloomSampleTree::build_full(plan, wrong_k), std::invalid_argument);
}

TEST(BuildPruned, EmptyOccupancyGivesEmptyTree) {
  const auto plan = manual_plan(1000, 500, 3, 3);
  const auto tree = BloomSampleTree::build_pruned(plan, linear_family(plan, 5), std::vector<Element>{});
  EXPECT_EQ(tree.node_count(), 0u);
  const auto q = tree.make_filter(std::vector<Element>{1, 2});
  std::mt19937_64 rng(5);
  EXPECT_FALSE(tree.sample(q, rng).element);
  EXPECT_TRUE(tree.reconstruct(q).elements.empty());
}

TEST(BuildPruned, FullOccupancyEqualsFullTree) {
  for (unsigned depth : {0u, 1u, 3u, 5u}) {
    const auto plan = manual_plan(1000, 1009, 3, depth);
    const auto family = linear_family(plan, 6);
    const auto full = BloomSampleTree::build_full(plan, family);
    const auto pruned = BloomSampleTree::build_pruned(plan, family, iota_range(0, 1000));
    EXPECT_EQ(full, pruned) << "depth " << depth;
    EXPECT_EQ(full.serialize(), pruned.serialize());
  }
}

TEST(BuildPruned, FullOccupancyWithPaddingOnlyLeaves) {
  // 512 leaves of 10 cover 5120, so the last 12 leaves hold nothing
  const auto plan = manual_plan(5000, 400, 3, 9);
  ASSERT_EQ(plan.leaf_size, 10u);
  const auto family = linear_family(plan, 6);
  const auto full = BloomSampleTree::build_full(plan, family);
  EXPECT_EQ(full.node_count(), plan.covering_node_count());
  const auto pruned = BloomSampleTree::build_pruned(plan, family, iota_range(0, 5000));
  EXPECT_EQ(full, pruned);
  EXPECT_EQ(full.serialize(), pruned.serialize());
  EXPECT_EQ(BloomSampleTree::deserialize(full.serialize()), full);
}

TEST(BuildPruned, SingleLeafClusterIsOnePath) {
  const auto plan = manual_plan(4096, 800, 3, 6);
  const auto tree = BloomSampleTree::build_pruned(plan, linear_family(plan, 7), iota_range(130, 190));
  EXPECT_EQ(tree.node_count(), plan.depth + 1);
}

TEST(BuildPruned, NodesOnlyWhereOccupied) {
  const auto plan = manual_plan(1 << 12, 1000, 3, 6);
  std::mt19937_64 rng(8);
  const auto occupied = evalkit::gen_uniform(1 << 12, 30, rng);
  const auto tree = BloomSampleTree::build_pruned(plan, linear_family(plan, 8), occupied);
  std::set<std::pair<unsigned, std::uint64_t>> expected;
  for (auto x : occupied) {
    for (unsigned level = 0; level <= plan.depth; ++level) expected.insert({level, x / plan.span_at_level(level)});
  }
  std::set<std::pair<unsigned, std::uint64_t>> actual;
  for (const auto& node : tree.nodes()) {
    actual.insert({node.level, node.index});
    const auto [lo, hi] = tree.scan_range(node);
    std::uint64_t inside = 0;
    for (auto x : occupied) inside += (x >= lo && x < hi);
    EXPECT_EQ(node.filter.inserted_count(), inside);
  }
  EXPECT_EQ(actual, expected);
}

TEST(BuildPruned, RejectsOutOfNamespace) {
  const auto plan = manual_plan(100, 100, 3, 2);
  EXPECT_THROW(BloomSampleTree::build_pruned(plan, linear_family(plan, 9), std::vector<Element>{100}),
               std::out_of_range);
}

TEST(PrunedInsert, FreshPathOnEmptyTree) {
  const auto plan = manual_plan(1 << 10, 500, 3, 5);
  auto tree = BloomSampleTree::build_pruned(plan, linear_family(plan, 10), std::vector<Element>{});
  const auto report = tree.insert(321);
  EXPECT_EQ(report.nodes_created, plan.depth + 1);
  EXPECT_EQ(report.nodes_touched, plan.depth + 1);
  EXPECT_EQ(tree.node_count(), plan.depth + 1);
}

TEST(PrunedInsert, RepeatedInsertKeepsBits) {
  const auto plan = manual_plan(1 << 10, 500, 3, 5);
  auto tree = BloomSampleTree::build_pruned(plan, linear_family(plan, 11), std::vector<Element>{5, 900});
  std::vector<std::vector<std::uint64_t>> before;
  for (const auto& node : tree.nodes()) before.emplace_back(node.filter.words().begin(), node.filter.words().end());
  const auto report = tree.insert(5);
  EXPECT_EQ(report.nodes_created, 0u);
  EXPECT_LE(report.nodes_touched, plan.depth + 1);
  for (std::size_t i = 0; i < tree.node_count(); ++i) {
    EXPECT_EQ(std::vector<std::uint64_t>(tree.nodes()[i].filter.words().begin(), tree.nodes()[i].filter.words().end()),
              before[i]);
  }
}

TEST(PrunedInsert, OrderIndependentOfBatchBuild) {
  const auto plan = manual_plan(100000, 2003, 3, 7);
  const auto family = linear_family(plan, 12);
  std::mt19937_64 rng(12);
  auto set = evalkit::gen_uniform(100000, 300, rng);
  const auto batch = BloomSampleTree::build_pruned(plan, family, set);
  std::shuffle(set.begin(), set.end(), rng);
  auto incremental = BloomSampleTree::build_pruned(plan, family, std::vector<Element>{});
  for (auto x : set) incremental.insert(x);
  EXPECT_EQ(batch, incremental);
  EXPECT_EQ(batch.serialize(), incremental.serialize());
  EXPECT_THROW(incremental.insert(100000), std::out_of_range);
}

TEST(Sample, SingletonQueryReturnsItsElement) {
  const auto plan = manual_plan(4096, 4000, 3, 5);
  const auto tree = BloomSampleTree::build_full(plan, murmur_family(plan, 13));
  std::mt19937_64 rng(13);
  for (Element x : {0u, 17u, 2048u, 4095u}) {
    const auto q = tree.make_filter(std::vector<Element>{x});
    const auto out = tree.sample(q, rng);
    ASSERT_TRUE(out.element.has_value());
    EXPECT_EQ(*out.element, x);
  }
}

TEST(Sample, EmptyQueryReturnsNullAfterTwoIntersections) {
  const auto plan = manual_plan(4096, 4000, 3, 5);
  const auto tree = BloomSampleTree::build_full(plan, murmur_family(plan, 14));
  std::mt19937_64 rng(14);
  const auto out = tree.sample(tree.make_filter(std::vector<Element>{}), rng);
  EXPECT_FALSE(out.element.has_value());
  EXPECT_EQ(out.counters.intersections, 2u);
  EXPECT_EQ(out.counters.membership_queries, 0u);
}

TEST(Sample, ResultsAreAlwaysPositives) {
  const auto plan = manual_plan(20000, 3000, 3, 6);
  const auto tree = BloomSampleTree::build_full(plan, murmur_family(plan, 15));
  std::mt19937_64 rng(15);
  const auto set = evalkit::gen_uniform(20000, 200, rng);
  const auto q = tree.make_filter(set);
  for (int i = 0; i < 500; ++i) {
    const auto out = tree.sample(q, rng);
    ASSERT_TRUE(out.element.has_value());
    EXPECT_TRUE(q.contains(*out.element));
    EXPECT_GE(out.counters.nodes_visited, plan.depth + 1);
  }
}

TEST(Sample, DeterministicReplay) {
  const auto plan = manual_plan(20000, 3000, 3, 6);
  const auto tree = BloomSampleTree::build_full(plan, murmur_family(plan, 16));
  std::mt19937_64 gen(16);
  const auto q = tree.make_filter(evalkit::gen_uniform(20000, 100, gen));
  std::mt19937_64 a(99), b(99);
  for (int i = 0; i < 100; ++i) {
    const auto x = tree.sample(q, a, 0.5);
    const auto y = tree.sample(q, b, 0.5);
    EXPECT_EQ(x.element, y.element);
    EXPECT_EQ(x.counters, y.counters);
  }
}

TEST(Sample, IncompatibleQueryThrows) {
  const auto plan = manual_plan(1000, 500, 3, 2);
  const auto tree = BloomSampleTree::build_full(plan, murmur_family(plan, 17));
  const BloomFilter other(murmur_family(plan, 18), 1000);
  std::mt19937_64 rng(1);
  EXPECT_THROW(tree.sample(other, rng), IncompatibleFilters);
  EXPECT_THROW(tree.reconstruct(other), IncompatibleFilters);
  EXPECT_THROW(tree.sample_many(other, 2, true, rng), IncompatibleFilters);
}

TEST(Sample, SmallTreeDistributionIsUniform) {
  // Tiny FP-free tree: each of 8 elements should come up ~1/8 of the time.
  const auto plan = manual_plan(256, 20011, 3, 4);
  const auto tree = BloomSampleTree::build_full(plan, murmur_family(plan, 19));
  const std::vector<Element> set{3, 40, 41, 100, 180, 181, 182, 255};
  const auto q = tree.make_filter(set);
  std::mt19937_64 rng(19);
  std::map<Element, int> counts;
  const int draws = 16000;
  for (int i = 0; i < draws; ++i) ++counts[*tree.sample(q, rng).element];
  ASSERT_EQ(counts.size(), set.size());
  const double p = 1.0 / 8, sd = std::sqrt(draws * p * (1 - p));
  for (auto [x, c] : counts) EXPECT_NEAR(c, draws * p, 5 * sd) << x;
}

TEST(SampleMany, SingleDrawMatchesSampleBitForBit) {
  const auto plan = manual_plan(30000, 4000, 3, 7);
  const auto tree = BloomSampleTree::build_full(plan, murmur_family(plan, 20));
  std::mt19937_64 gen(20);
  const auto q = tree.make_filter(evalkit::gen_uniform(30000, 300, gen));
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 a(seed), b(seed);
    const auto one = tree.sample(q, a);
    const auto many = tree.sample_many(q, 1, true, b);
    ASSERT_EQ(many.elements.size(), one.element ? 1u : 0u);
    if (one.element) {
      EXPECT_EQ(many.elements[0], *one.element);
    }
    EXPECT_EQ(one.counters, many.counters);
    EXPECT_EQ(a(), b());
  }
}

TEST(SampleMany, LeftPathCountFollowsCoin) {
  // depth-1 tree without false positives: a draw lands left iff its coin went left.
  const auto plan = manual_plan(2000, 200003, 3, 1);
  const auto tree = BloomSampleTree::build_full(plan, murmur_family(plan, 21));
  std::vector<Element> set = iota_range(0, 30);
  for (Element x = 1000; x < 1070; ++x) set.push_back(x);
  const auto q = tree.make_filter(set);
  const double k1 = intersection_estimate(tree.nodes()[1].filter, q);
  const double k2 = intersection_estimate(tree.nodes()[2].filter, q);
  const double p = k1 / (k1 + k2);
  std::mt19937_64 rng(21);
  const int trials = 10000;
  double total = 0;
  for (int t = 0; t < trials; ++t) {
    const auto out = tree.sample_many(q, 3, true, rng);
    ASSERT_EQ(out.elements.size(), 3u);
    total += static_cast<double>(std::count_if(out.elements.begin(), out.elements.end(),
                                               [](Element x) { return x < 1000; }));
  }
  const double sigma = std::sqrt(3 * p * (1 - p) / trials);
  EXPECT_NEAR(total / trials, 3 * p, 3 * sigma);
}

TEST(SampleMany, WithoutReplacementCoversAllPositives) {
  const auto plan = manual_plan(30000, 1500, 3, 6);
  const auto tree = BloomSampleTree::build_full(plan, murmur_family(plan, 22));
  std::mt19937_64 rng(22);
  const auto q = tree.make_filter(evalkit::gen_uniform(30000, 150, rng));
  const auto positives = tree.reconstruct(q, 0.0).elements;
  const auto out = tree.sample_many(q, positives.size(), false, rng, 0.0);
  auto got = out.elements;
  std::sort(got.begin(), got.end());
  EXPECT_EQ(got, positives);
  // asking for more than exists returns a short list
  const auto more = tree.sample_many(q, positives.size() + 10, false, rng, 0.0);
  EXPECT_EQ(more.elements.size(), positives.size());
  EXPECT_THROW(tree.sample_many(q, 0, true, rng), std::invalid_argument);
}

TEST(SampleMany, WithReplacementReturnsPositives) {
  const auto plan = manual_plan(30000, 3000, 3, 6);
  const auto tree = BloomSampleTree::build_full(plan, murmur_family(plan, 23));
  std::mt19937_64 rng(23);
  const auto q = tree.make_filter(evalkit::gen_uniform(30000, 50, rng));
  const auto out = tree.sample_many(q, 500, true, rng);
  EXPECT_EQ(out.elements.size(), 500u);
  for (auto x : out.elements) EXPECT_TRUE(q.contains(x));
}

TEST(Reconstruct, FigureOneSet) {
  const auto plan = manual_plan(16, 101, 3, 2);
  const auto tree = BloomSampleTree::build_full(plan, linear_family(plan, 24));
  const auto q = tree.make_filter(std::vector<Element>{4, 6});
  const auto expected = da_reconstruct(16, q).elements;
  EXPECT_EQ(tree.reconstruct(q, 0.0).elements, expected);
  EXPECT_EQ(expected, (std::vector<Element>{4, 6}));
}

TEST(Reconstruct, EmptyQuery) {
  const auto plan = manual_plan(5000, 1000, 3, 4);
  const auto tree = BloomSampleTree::build_full(plan, murmur_family(plan, 25));
  EXPECT_TRUE(tree.reconstruct(tree.make_filter(std::vector<Element>{})).elements.empty());
}

TEST(Reconstruct, EqualsDictionaryAttackAtZeroThreshold) {
  const auto plan = manual_plan(20000, 2500, 3, 6);
  const auto tree = BloomSampleTree::build_full(plan, murmur_family(plan, 26));
  std::mt19937_64 rng(26);
  std::uniform_int_distribution<std::uint64_t> size(0, 400);
  for (int i = 0; i < 200; ++i) {
    const auto set = evalkit::gen_uniform(20000, size(rng), rng);
    const auto q = tree.make_filter(set);
    const auto got = tree.reconstruct(q, 0.0).elements;
    ASSERT_EQ(got, da_reconstruct(20000, q).elements) << "query " << i;
    EXPECT_TRUE(std::includes(got.begin(), got.end(), set.begin(), set.end()));
  }
}

TEST(Reconstruct, PaddedNamespaceScansOnlyUpToM) {
  const auto plan = manual_plan(1001, 3001, 3, 3);  // leaf 126, padded 1008
  const auto tree = BloomSampleTree::build_full(plan, murmur_family(plan, 27));
  const auto q = tree.make_filter(std::vector<Element>{1000, 0, 500});
  const auto out = tree.reconstruct(q, 0.0);
  EXPECT_EQ(out.elements, da_reconstruct(1001, q).elements);
  // the last leaf covers [882, 1008) but only [882, 1001) is probed
  EXPECT_EQ(out.counters.membership_queries, 126u * (out.counters.leaves_scanned - 1) + 119u);
}

TEST(Serialization, RoundTripFullAndPruned) {
  const auto plan = plan_from_accuracy(0.8, 100, 20000, 3, 80.0);
  const auto family = linear_family(plan, 28);
  std::mt19937_64 rng(28);
  const auto full = BloomSampleTree::build_full(plan, family);
  const auto pruned = BloomSampleTree::build_pruned(plan, family, evalkit::gen_uniform(20000, 500, rng));
  for (const auto* tree : {&full, &pruned}) {
    const auto bytes = tree->serialize();
    ASSERT_EQ(bytes.substr(0, 4), "BSTR");
    const auto back = BloomSampleTree::deserialize(bytes);
    EXPECT_EQ(back, *tree);
    EXPECT_EQ(back.serialize(), bytes);
    const auto q = tree->make_filter(evalkit::gen_uniform(20000, 100, rng));
    std::mt19937_64 a(3), c(3);
    const auto x = tree->sample(q, a);
    const auto z = back.sample(q, c);
    EXPECT_EQ(x.element, z.element);
    EXPECT_EQ(x.counters, z.counters);
  }
}

TEST(Serialization, EmptyTreeRoundTrip) {
  const auto plan = manual_plan(1000, 500, 3, 3);
  const auto tree = BloomSampleTree::build_pruned(plan, linear_family(plan, 29), std::vector<Element>{});
  const auto back = BloomSampleTree::deserialize(tree.serialize());
  EXPECT_EQ(back.node_count(), 0u);
  EXPECT_EQ(back, tree);
}

TEST(Serialization, RejectsCorruption) {
  const auto plan = manual_plan(1000, 500, 3, 2);
  const auto bytes = BloomSampleTree::build_full(plan, linear_family(plan, 30)).serialize();
  EXPECT_THROW(BloomSampleTree::deserialize(bytes.substr(0, bytes.size() - 3)), FormatError);
  EXPECT_THROW(BloomSampleTree::deserialize(bytes + "z"), FormatError);
  auto magic = bytes;
  magic[1] = 'X';
  EXPECT_THROW(BloomSampleTree::deserialize(magic), FormatError);
  auto version = bytes;
  version[4] = 2;
  EXPECT_THROW(BloomSampleTree::deserialize(version), FormatError);
}

TEST(VisitBound, MeanNodesWithinConstantFactor) {
  const std::uint64_t M = 100000;
  const std::uint64_t n = 100;
  const auto plan = plan_from_accuracy(0.8, n, M, 3, LinearCostModel{0.0043});
  const auto tree = BloomSampleTree::build_full(plan, murmur_family(plan, 31));
  std::mt19937_64 rng(31);
  double total = 0;
  for (int i = 0; i < 100; ++i) {
    const auto q = tree.make_filter(evalkit::gen_uniform(M, n, rng));
    total += double(tree.sample(q, rng).counters.nodes_visited);
  }
  const double bound = sample_visit_bound(double(M), double(plan.leaf_size), double(plan.bits), 3, double(n));
  EXPECT_LE(total / 100, 4 * bound);
}
