#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bloomsample/detail/bytes.hpp"
#include "bloomsample/errors.hpp"
#include "bloomsample/hashing.hpp"

namespace bloomsample {

/// An m-bit Bloom filter bound to a hash family and a namespace [0, M).
///
/// Bit i lives in word i / 64 at position i % 64. Bits past m in the last word
/// are always zero. `inserted_count` is advisory and only maintained for
/// filters built through insert(); estimators work from bit counts alone.
class BloomFilter {
 public:
  static constexpr std::uint8_t kFormatVersion = 1;
  static constexpr std::uint64_t kAbsentCount = std::numeric_limits<std::uint64_t>::max();

  BloomFilter(std::shared_ptr<const HashFamily> family, std::uint64_t namespace_size)
      : family_(std::move(family)),
        namespace_size_(namespace_size),
        words_(word_count(family_->range()), 0),
        inserted_(std::uint64_t{0}) {}

  BloomFilter(const HashFamily& family, std::uint64_t namespace_size)
      : BloomFilter(std::make_shared<const HashFamily>(family), namespace_size) {}

  template <typename Range>
  static BloomFilter from_elements(std::shared_ptr<const HashFamily> family,
                                   std::uint64_t namespace_size, const Range& elements) {
    BloomFilter filter(std::move(family), namespace_size);
    for (auto x : elements) filter.insert(static_cast<Element>(x));
    return filter;
  }

  void insert(Element x) {
    if (x >= namespace_size_) {
      throw std::out_of_range("element " + std::to_string(x) + " outside namespace [0, " +
                              std::to_string(namespace_size_) + ")");
    }
    const auto& h = *family_;
    for (unsigned i = 0; i < h.size(); ++i) set_bit(h.hash_unchecked(i, x));
    if (inserted_) ++*inserted_;
  }

  bool contains(Element x) const {
    const auto& h = *family_;
    for (unsigned i = 0; i < h.size(); ++i) {
      if (!test(h.hash_unchecked(i, x))) return false;
    }
    return true;
  }

  bool test(std::uint64_t bit) const { return (words_[bit >> 6] >> (bit & 63)) & 1U; }

  std::uint64_t popcount() const {
    std::uint64_t total = 0;
    for (auto w : words_) total += static_cast<std::uint64_t>(std::popcount(w));
    return total;
  }

  bool is_zero() const {
    return std::all_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w == 0; });
  }

  bool compatible_with(const BloomFilter& other) const {
    return family_ == other.family_ || *family_ == *other.family_;
  }

  BloomFilter& operator|=(const BloomFilter& other) {
    require_compatible(other);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
    inserted_ = (inserted_ && other.inserted_) ? std::optional(*inserted_ + *other.inserted_)
                                               : std::nullopt;
    return *this;
  }

  BloomFilter& operator&=(const BloomFilter& other) {
    require_compatible(other);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= other.words_[i];
    inserted_.reset();
    return *this;
  }

  friend BloomFilter unite(BloomFilter lhs, const BloomFilter& rhs) { return lhs |= rhs; }
  friend BloomFilter intersect(BloomFilter lhs, const BloomFilter& rhs) { return lhs &= rhs; }

  /// Number of set bits in (lhs AND rhs), without materialising the result.
  friend std::uint64_t and_popcount(const BloomFilter& lhs, const BloomFilter& rhs) {
    lhs.require_compatible(rhs);
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < lhs.words_.size(); ++i) {
      total += static_cast<std::uint64_t>(std::popcount(lhs.words_[i] & rhs.words_[i]));
    }
    return total;
  }

  std::uint64_t bit_count() const { return family_->range(); }
  unsigned hash_count() const { return family_->size(); }
  std::uint64_t namespace_size() const { return namespace_size_; }
  const HashFamily& family() const { return *family_; }
  const std::shared_ptr<const HashFamily>& shared_family() const { return family_; }
  std::optional<std::uint64_t> inserted_count() const { return inserted_; }
  void set_inserted_count(std::optional<std::uint64_t> count) { inserted_ = count; }
  std::span<const std::uint64_t> words() const { return words_; }

  /// "BFLT", version, family descriptor, m, M, inserted_count (or all-ones), bit words.
  void serialize_into(std::string& out) const {
    out.append("BFLT");
    detail::put_le(out, kFormatVersion);
    family_->serialize_into(out);
    detail::put_le(out, bit_count());
    detail::put_le(out, namespace_size_);
    detail::put_le(out, inserted_.value_or(kAbsentCount));
    for (auto w : words_) detail::put_le(out, w);
  }

  std::string serialize() const {
    std::string out;
    serialize_into(out);
    return out;
  }

  static BloomFilter deserialize(detail::ByteReader& in,
                                 std::shared_ptr<const HashFamily> expected_family = nullptr) {
    in.expect_magic("BFLT");
    const auto version = in.get_le<std::uint8_t>();
    if (version != kFormatVersion) {
      throw FormatError("unsupported filter format version " + std::to_string(version));
    }
    auto family = HashFamily::deserialize(in);
    const auto m = in.get_le<std::uint64_t>();
    if (m != family.range()) throw FormatError("filter size disagrees with its hash family");
    const auto namespace_size = in.get_le<std::uint64_t>();
    const auto count = in.get_le<std::uint64_t>();

    std::shared_ptr<const HashFamily> shared;
    if (expected_family && *expected_family == family) {
      shared = std::move(expected_family);
    } else {
      shared = std::make_shared<const HashFamily>(std::move(family));
    }
    BloomFilter filter(std::move(shared), namespace_size);
    for (auto& w : filter.words_) w = in.get_le<std::uint64_t>();
    if (const auto tail = m & 63; tail != 0 && (filter.words_.back() >> tail) != 0) {
      throw FormatError("filter has bits set beyond m");
    }
    filter.inserted_ = count == kAbsentCount ? std::nullopt : std::optional(count);
    return filter;
  }

  static BloomFilter deserialize(std::string_view bytes) {
    detail::ByteReader in(bytes);
    auto filter = deserialize(in);
    if (!in.at_end()) throw FormatError("trailing bytes after filter");
    return filter;
  }

  friend bool operator==(const BloomFilter& lhs, const BloomFilter& rhs) {
    return lhs.compatible_with(rhs) && lhs.namespace_size_ == rhs.namespace_size_ &&
           lhs.inserted_ == rhs.inserted_ && lhs.words_ == rhs.words_;
  }

  /// Bit-vector equality only, ignoring the advisory count.
  bool same_bits(const BloomFilter& other) const {
    return compatible_with(other) && words_ == other.words_;
  }

 private:
  static std::size_t word_count(std::uint64_t m) { return static_cast<std::size_t>((m + 63) / 64); }

  void set_bit(std::uint64_t bit) { words_[bit >> 6] |= std::uint64_t{1} << (bit & 63); }

  void require_compatible(const BloomFilter& other) const {
    if (!compatible_with(other)) {
      throw IncompatibleFilters("filters differ in m or hash family (m=" +
                                std::to_string(bit_count()) + " vs m=" +
                                std::to_string(other.bit_count()) + ")");
    }
  }

  std::shared_ptr<const HashFamily> family_;
  std::uint64_t namespace_size_;
  std::vector<std::uint64_t> words_;
  std::optional<std::uint64_t> inserted_;
};

}  // namespace bloomsample
