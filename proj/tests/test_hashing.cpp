#include <gtest/gtest.h>

#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "bloomsample/hashing.hpp"

using namespace bloomsample;

// Reference digests from the canonical MurmurHash3_x64_128 (first 64-bit lane)
// and MD5 implementations.
TEST(Digests, MurmurMatchesReferenceVectors) {
  EXPECT_EQ(detail::murmur3_u64(0, 0), 0x28df63b7cc57c3cbULL);
  EXPECT_EQ(detail::murmur3_u64(1, 0), 0x4403b7fb05c44aULL);
  EXPECT_EQ(detail::murmur3_u64(42, 7), 0xc8712ab4da490dbcULL);
  EXPECT_EQ(detail::murmur3_u64(123456789, 0xdeadbeef), 0x56dbecef719a2b9bULL);
  EXPECT_EQ(detail::murmur3_u64(~0ULL, 1), 0xc59e33222ba7784cULL);
}

TEST(Digests, Md5MatchesReferenceVectors) {
  EXPECT_EQ(detail::md5_u64(0, 0), 0xbff94be43613e74aULL);
  EXPECT_EQ(detail::md5_u64(42, 7), 0xded4daa978c20876ULL);
  EXPECT_EQ(detail::md5_u64((1ULL << 63) + 5, (1ULL << 40) + 3), 0x2449d6c6214f1709ULL);
}

TEST(HashFamily, SimpleLinearFormula) {
  const auto h = HashFamily::simple_linear(16, {{3, 5}, {7, 1}});
  EXPECT_EQ(h.size(), 2u);
  EXPECT_EQ(h.range(), 16u);
  for (Element x = 0; x < 100; ++x) {
    EXPECT_EQ(h(0, x), (3 * x + 5) % 16);
    EXPECT_EQ(h(1, x), (7 * x + 1) % 16);
  }
}

TEST(HashFamily, SimpleLinearRejectsNonUnitMultiplier) {
  EXPECT_THROW(HashFamily::simple_linear(16, {{4, 1}}), std::invalid_argument);
  EXPECT_THROW(HashFamily::simple_linear(1, {{1, 0}}), std::invalid_argument);
  EXPECT_THROW(HashFamily::simple_linear(16, {}), std::invalid_argument);
}

TEST(HashFamily, IndexOutOfRangeThrows) {
  const auto h = HashFamily::seeded(HashKind::Murmur3Like, 3, 1000, 9);
  EXPECT_THROW(h(3, 0), std::out_of_range);
  EXPECT_NO_THROW(h(2, 0));
}

TEST(HashFamily, OutputsStayBelowM) {
  for (auto kind : {HashKind::Murmur3Like, HashKind::MD5Like}) {
    const auto h = HashFamily::seeded(kind, 4, 997, 12345);
    for (Element x = 0; x < 2000; ++x) {
      for (unsigned i = 0; i < 4; ++i) EXPECT_LT(h(i, x), 997u);
    }
  }
}

TEST(HashFamily, SeededFunctionsUseDerivedSeeds) {
  const std::uint64_t base = 0xabcdef;
  const auto h = HashFamily::seeded(HashKind::Murmur3Like, 3, 1u << 20, base);
  for (unsigned i = 0; i < 3; ++i) {
    const auto seed = base ^ (i * 0x9e3779b97f4a7c15ULL);
    EXPECT_EQ(h.parameters()[i], seed);
    EXPECT_EQ(h(i, 77), detail::murmur3_u64(77, seed) % (1u << 20));
  }
  EXPECT_THROW(HashFamily::seeded(HashKind::SimpleLinear, 3, 100, 1), std::invalid_argument);
}

TEST(HashFamily, PreimageMatchesBruteForce) {
  std::mt19937_64 rng(5);
  const std::uint64_t m = 97;
  const std::uint64_t M = 1000;
  const auto h = HashFamily::random_simple_linear(3, m, rng);
  for (unsigned i = 0; i < 3; ++i) {
    for (std::uint64_t bit = 0; bit < m; ++bit) {
      std::vector<Element> expected;
      for (Element x = 0; x < M; ++x) {
        if (h(i, x) == bit) expected.push_back(x);
      }
      EXPECT_EQ(h.preimage(i, bit, M), expected) << "i=" << i << " bit=" << bit;
    }
  }
}

TEST(HashFamily, PreimageCompositeModulus) {
  const auto h = HashFamily::simple_linear(100, {{37, 11}});
  for (std::uint64_t bit = 0; bit < 100; ++bit) {
    for (auto x : h.preimage(0, bit, 5000)) EXPECT_EQ(h(0, x), bit);
    EXPECT_EQ(h.preimage(0, bit, 5000).size(), 50u);
  }
}

TEST(HashFamily, PreimageErrors) {
  const auto simple = HashFamily::simple_linear(16, {{3, 5}});
  EXPECT_THROW(simple.preimage(1, 0, 16), std::out_of_range);
  EXPECT_THROW(simple.preimage(0, 16, 16), std::out_of_range);
  const auto murmur = HashFamily::seeded(HashKind::Murmur3Like, 2, 16, 1);
  EXPECT_THROW(murmur.preimage(0, 0, 16), UnsupportedOperation);
  EXPECT_FALSE(murmur.invertible());
  EXPECT_TRUE(simple.invertible());
}

TEST(HashFamily, PreimageSmallNamespace) {
  const auto h = HashFamily::simple_linear(16, {{3, 5}});
  EXPECT_TRUE(h.preimage(0, 4, 0).empty());
  // h(0) = 5
  EXPECT_EQ(h.preimage(0, 5, 1), std::vector<Element>{0});
}

TEST(HashFamily, SerializationRoundTrip) {
  std::mt19937_64 rng(8);
  const std::vector<HashFamily> families = {
      HashFamily::random_simple_linear(4, 60869, rng),
      HashFamily::seeded(HashKind::Murmur3Like, 3, 1 << 16, 99),
      HashFamily::seeded(HashKind::MD5Like, 5, 12345, 1),
  };
  for (const auto& f : families) {
    const auto bytes = f.serialize();
    const auto back = HashFamily::deserialize(bytes);
    EXPECT_EQ(back, f);
    EXPECT_EQ(back.serialize(), bytes);
    for (Element x = 0; x < 50; ++x) EXPECT_EQ(back(0, x), f(0, x));
  }
}

TEST(HashFamily, DeserializeRejectsGarbage) {
  EXPECT_THROW(HashFamily::deserialize(std::string_view("\x07\x01\x00", 3)), FormatError);
  auto bytes = HashFamily::simple_linear(16, {{3, 5}}).serialize();
  EXPECT_THROW(HashFamily::deserialize(std::string_view(bytes).substr(0, bytes.size() - 1)), FormatError);
  // a = 4 is not a unit modulo 16
  auto bad = bytes;
  bad[11] = 4;
  EXPECT_THROW(HashFamily::deserialize(bad), FormatError);
}

TEST(HashFamily, ParseKindNames) {
  EXPECT_EQ(parse_hash_kind("simple"), HashKind::SimpleLinear);
  EXPECT_EQ(parse_hash_kind("murmur3"), HashKind::Murmur3Like);
  EXPECT_EQ(parse_hash_kind("md5"), HashKind::MD5Like);
  EXPECT_THROW(parse_hash_kind("sha1"), std::invalid_argument);
  EXPECT_EQ(to_string(HashKind::MD5Like), "md5");
}

TEST(HashFamily, SeededOutputsRoughlyUniform) {
  const std::uint64_t m = 64;
  const auto h = HashFamily::seeded(HashKind::Murmur3Like, 1, m, 3);
  std::vector<int> counts(m, 0);
  const int draws = 64000;
  for (Element x = 0; x < static_cast<Element>(draws); ++x) ++counts[h(0, x)];
  // each bucket ~ Binomial(64000, 1/64): mean 1000, sd ~31
  for (auto c : counts) {
    EXPECT_GT(c, 1000 - 6 * 31);
    EXPECT_LT(c, 1000 + 6 * 31);
  }
}
