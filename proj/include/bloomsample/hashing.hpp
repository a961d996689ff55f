#pragma once

#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bloomsample/detail/bytes.hpp"
#include "bloomsample/detail/digests.hpp"
#include "bloomsample/errors.hpp"

namespace bloomsample {

/// An element of the integer namespace [0, M).
using Element = std::uint64_t;

enum class HashKind : std::uint8_t { SimpleLinear = 0, Murmur3Like = 1, MD5Like = 2 };

inline std::string_view to_string(HashKind kind) {
  switch (kind) {
    case HashKind::SimpleLinear: return "simple";
    case HashKind::Murmur3Like: return "murmur3";
    case HashKind::MD5Like: return "md5";
  }
  return "unknown";
}

inline HashKind parse_hash_kind(std::string_view name) {
  if (name == "simple") return HashKind::SimpleLinear;
  if (name == "murmur3") return HashKind::Murmur3Like;
  if (name == "md5") return HashKind::MD5Like;
  throw std::invalid_argument("unknown hash family '" + std::string(name) + "'");
}

struct LinearCoefficients {
  std::uint64_t a = 1;
  std::uint64_t b = 0;
};

namespace detail {

inline std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

// Inverse of a modulo m; requires gcd(a, m) == 1.
inline std::uint64_t inverse_mod(std::uint64_t a, std::uint64_t m) {
  __int128 old_r = static_cast<__int128>(a % m), r = static_cast<__int128>(m);
  __int128 old_s = 1, s = 0;
  while (r != 0) {
    const __int128 q = old_r / r;
    old_r -= q * r;
    std::swap(old_r, r);
    old_s -= q * s;
    std::swap(old_s, s);
  }
  if (old_r != 1) throw std::invalid_argument("coefficient is not a unit modulo m");
  __int128 inv = old_s % static_cast<__int128>(m);
  if (inv < 0) inv += m;
  return static_cast<std::uint64_t>(inv);
}

}  // namespace detail

/// k indexed hash functions mapping namespace elements to bit indices [0, m).
///
/// SimpleLinear computes (a_i * x + b_i) mod m and is weakly invertible: all
/// preimages of a bit index inside [0, M) can be enumerated in O(M/m).
/// Murmur3Like and MD5Like are seeded per function with
/// seed_i = base_seed ^ (i * 0x9e3779b97f4a7c15) and reduced modulo m.
///
/// Immutable once created.
class HashFamily {
 public:
  static constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

  static HashFamily simple_linear(std::uint64_t m, std::vector<LinearCoefficients> coefficients) {
    check_shape(coefficients.size(), m);
    HashFamily family(HashKind::SimpleLinear, static_cast<std::uint16_t>(coefficients.size()), m);
    family.params_.reserve(2 * coefficients.size());
    for (const auto& c : coefficients) {
      if (std::gcd(c.a % m, m) != 1) {
        throw std::invalid_argument("SimpleLinear coefficient a=" + std::to_string(c.a) +
                                    " is not coprime with m=" + std::to_string(m));
      }
      family.params_.push_back(c.a % m);
      family.params_.push_back(c.b % m);
    }
    family.derive_inverses();
    return family;
  }

  /// Draws a_i uniformly from the units modulo m and b_i uniformly from [0, m).
  template <typename Rng>
  static HashFamily random_simple_linear(unsigned k, std::uint64_t m, Rng& rng) {
    check_shape(k, m);
    std::uniform_int_distribution<std::uint64_t> unit(1, m - 1);
    std::uniform_int_distribution<std::uint64_t> offset(0, m - 1);
    std::vector<LinearCoefficients> coefficients(k);
    for (auto& c : coefficients) {
      do {
        c.a = unit(rng);
      } while (std::gcd(c.a, m) != 1);
      c.b = offset(rng);
    }
    return simple_linear(m, std::move(coefficients));
  }

  static HashFamily seeded(HashKind kind, unsigned k, std::uint64_t m, std::uint64_t base_seed) {
    if (kind == HashKind::SimpleLinear) {
      throw std::invalid_argument("seeded() builds Murmur3Like or MD5Like families only");
    }
    check_shape(k, m);
    HashFamily family(kind, static_cast<std::uint16_t>(k), m);
    family.params_.reserve(k);
    for (unsigned i = 0; i < k; ++i) family.params_.push_back(base_seed ^ (i * kGoldenGamma));
    return family;
  }

  HashKind kind() const { return kind_; }
  unsigned size() const { return k_; }
  std::uint64_t range() const { return m_; }
  bool invertible() const { return kind_ == HashKind::SimpleLinear; }

  /// Per-function parameters: (a_i, b_i) pairs for SimpleLinear, seed_i otherwise.
  const std::vector<std::uint64_t>& parameters() const { return params_; }

  std::uint64_t operator()(unsigned i, Element x) const {
    if (i >= k_) {
      throw std::out_of_range("hash index " + std::to_string(i) + " >= k=" + std::to_string(k_));
    }
    return hash_unchecked(i, x);
  }

  std::uint64_t hash_unchecked(unsigned i, Element x) const {
    switch (kind_) {
      case HashKind::SimpleLinear: {
        const auto a = params_[2 * i];
        const auto b = params_[2 * i + 1];
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(a) * x + b) % m_);
      }
      case HashKind::Murmur3Like: return detail::murmur3_u64(x, params_[i]) % m_;
      case HashKind::MD5Like: return detail::md5_u64(x, params_[i]) % m_;
    }
    return 0;
  }

  /// Calls fn(x) for every x in [0, namespace_size) with h_i(x) == bit, ascending.
  template <typename Fn>
  void for_each_preimage(unsigned i, std::uint64_t bit, std::uint64_t namespace_size, Fn&& fn) const {
    require_invertible();
    if (i >= k_) throw std::out_of_range("hash index out of range");
    if (bit >= m_) throw std::out_of_range("bit index out of range");
    const auto b = params_[2 * i + 1];
    const std::uint64_t shifted = (bit + m_ - b) % m_;
    const std::uint64_t first = detail::mul_mod(inverses_[i], shifted, m_);
    for (std::uint64_t x = first; x < namespace_size; x += m_) {
      fn(x);
      if (namespace_size - x <= m_) break;
    }
  }

  std::vector<Element> preimage(unsigned i, std::uint64_t bit, std::uint64_t namespace_size) const {
    std::vector<Element> out;
    for_each_preimage(i, bit, namespace_size, [&](Element x) { out.push_back(x); });
    return out;
  }

  /// kind (1 byte), k (2 bytes), m (8 bytes), then per-function 64-bit words.
  void serialize_into(std::string& out) const {
    detail::put_le(out, static_cast<std::uint8_t>(kind_));
    detail::put_le(out, k_);
    detail::put_le(out, m_);
    for (auto word : params_) detail::put_le(out, word);
  }

  std::string serialize() const {
    std::string out;
    serialize_into(out);
    return out;
  }

  static HashFamily deserialize(detail::ByteReader& in) {
    const auto tag = in.get_le<std::uint8_t>();
    if (tag > static_cast<std::uint8_t>(HashKind::MD5Like)) {
      throw FormatError("unknown hash family tag " + std::to_string(tag));
    }
    const auto kind = static_cast<HashKind>(tag);
    const auto k = in.get_le<std::uint16_t>();
    const auto m = in.get_le<std::uint64_t>();
    if (k < 1 || m < 2) throw FormatError("hash family descriptor with k < 1 or m < 2");
    if (kind == HashKind::SimpleLinear) {
      std::vector<LinearCoefficients> coefficients(k);
      for (auto& c : coefficients) {
        c.a = in.get_le<std::uint64_t>();
        c.b = in.get_le<std::uint64_t>();
      }
      try {
        return simple_linear(m, std::move(coefficients));
      } catch (const std::invalid_argument& e) {
        throw FormatError(e.what());
      }
    }
    HashFamily family(kind, k, m);
    family.params_.resize(k);
    for (auto& word : family.params_) word = in.get_le<std::uint64_t>();
    return family;
  }

  static HashFamily deserialize(std::string_view bytes) {
    detail::ByteReader in(bytes);
    return deserialize(in);
  }

  friend bool operator==(const HashFamily& lhs, const HashFamily& rhs) {
    return lhs.kind_ == rhs.kind_ && lhs.k_ == rhs.k_ && lhs.m_ == rhs.m_ &&
           lhs.params_ == rhs.params_;
  }

 private:
  HashFamily(HashKind kind, std::uint16_t k, std::uint64_t m) : kind_(kind), k_(k), m_(m) {}

  static void check_shape(std::size_t k, std::uint64_t m) {
    if (k < 1 || k > 0xffff) throw std::invalid_argument("hash count k must be in [1, 65535]");
    if (m < 2) throw std::invalid_argument("bit-array size m must be >= 2");
  }

  void require_invertible() const {
    if (!invertible()) {
      throw UnsupportedOperation("hash family '" + std::string(to_string(kind_)) +
                                 "' is not weakly invertible");
    }
  }

  void derive_inverses() {
    inverses_.resize(k_);
    for (unsigned i = 0; i < k_; ++i) inverses_[i] = detail::inverse_mod(params_[2 * i], m_);
  }

  HashKind kind_;
  std::uint16_t k_;
  std::uint64_t m_;
  std::vector<std::uint64_t> params_;
  std::vector<std::uint64_t> inverses_;
};

}  // namespace bloomsample
