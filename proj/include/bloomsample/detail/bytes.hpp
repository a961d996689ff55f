#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <type_traits>

#include "bloomsample/errors.hpp"

namespace bloomsample::detail {

// Little-endian encoding of unsigned integers and IEEE doubles.
template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_unsigned_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>(static_cast<std::uint8_t>(value >> (8 * i))));
  }
}

inline void put_f64(std::string& out, double value) {
  std::uint64_t raw = 0;
  std::memcpy(&raw, &value, sizeof raw);
  put_le(out, raw);
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  template <typename T>
  T get_le() {
    static_assert(std::is_unsigned_v<T>);
    need(sizeof(T));
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      value |= static_cast<T>(static_cast<std::uint8_t>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return value;
  }

  double get_f64() {
    const auto raw = get_le<std::uint64_t>();
    double value = 0;
    std::memcpy(&value, &raw, sizeof value);
    return value;
  }

  void expect_magic(std::string_view magic) {
    need(magic.size());
    if (data_.substr(pos_, magic.size()) != magic) {
      throw FormatError("bad magic: expected \"" + std::string(magic) + "\"");
    }
    pos_ += magic.size();
  }

  std::size_t position() const { return pos_; }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw FormatError("truncated input");
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace bloomsample::detail
