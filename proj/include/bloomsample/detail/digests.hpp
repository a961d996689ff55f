#pragma once

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cstdint>
#include <memory>
#include <stdexcept>

namespace bloomsample::detail {

inline std::uint64_t fmix64(std::uint64_t k) {
  k ^= k >> 33;
  k *= 0xff51afd7ed558ccdULL;
  k ^= k >> 33;
  k *= 0xc4ceb9fe1a85ec53ULL;
  k ^= k >> 33;
  return k;
}

// MurmurHash3_x64_128 restricted to one 8-byte little-endian key, low 64 bits
// of the digest. The seed initialises both lanes at full 64-bit width.
inline std::uint64_t murmur3_u64(std::uint64_t key, std::uint64_t seed) {
  constexpr std::uint64_t c1 = 0x87c37b91114253d5ULL;
  constexpr std::uint64_t c2 = 0x4cf5ad432745937fULL;
  constexpr std::uint64_t len = 8;

  std::uint64_t h1 = seed;
  std::uint64_t h2 = seed;

  // tail: 8 bytes land entirely in k1
  std::uint64_t k1 = key;
  k1 *= c1;
  k1 = std::rotl(k1, 31);
  k1 *= c2;
  h1 ^= k1;

  h1 ^= len;
  h2 ^= len;
  h1 += h2;
  h2 += h1;
  h1 = fmix64(h1);
  h2 = fmix64(h2);
  h1 += h2;
  return h1;
}

// MD5(seed || key), both 8-byte little-endian; first 8 digest bytes read
// little-endian.
inline std::uint64_t md5_u64(std::uint64_t key, std::uint64_t seed) {
  struct CtxDeleter {
    void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
  };
  thread_local std::unique_ptr<EVP_MD_CTX, CtxDeleter> ctx{EVP_MD_CTX_new()};
  static const EVP_MD* md5 = EVP_md5();

  std::array<unsigned char, 16> message{};
  for (int i = 0; i < 8; ++i) {
    message[i] = static_cast<unsigned char>(seed >> (8 * i));
    message[8 + i] = static_cast<unsigned char>(key >> (8 * i));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int digest_len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), md5, nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), message.data(), message.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &digest_len) != 1) {
    throw std::runtime_error("MD5 digest failed");
  }
  std::uint64_t out = 0;
  for (int i = 0; i < 8; ++i) out |= static_cast<std::uint64_t>(digest[i]) << (8 * i);
  return out;
}

}  // namespace bloomsample::detail
