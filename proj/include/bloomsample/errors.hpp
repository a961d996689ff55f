#pragma once

#include <stdexcept>
#include <string>

namespace bloomsample {

/// Raised when two filters (or a filter and a tree) do not share m and hash family.
class IncompatibleFilters : public std::invalid_argument {
 public:
  explicit IncompatibleFilters(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when an operation needs a capability the hash family lacks (e.g. inversion).
class UnsupportedOperation : public std::logic_error {
 public:
  explicit UnsupportedOperation(const std::string& what) : std::logic_error(what) {}
};

/// Malformed or truncated serialized data.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bloomsample
