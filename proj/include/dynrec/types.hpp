#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace dynrec {

/// Dense, append-only node index. The tag keeps user and item indices apart.
template <class Tag>
struct Index {
  std::uint32_t value = 0;

  constexpr Index() = default;
  constexpr explicit Index(std::uint32_t v) : value(v) {}
  constexpr explicit Index(std::size_t v) : value(static_cast<std::uint32_t>(v)) {}

  constexpr auto operator<=>(const Index&) const = default;

  template <class H>
  friend H AbslHashValue(H h, Index id) {
    return H::combine(std::move(h), id.value);
  }
};

using UserId = Index<struct UserTag>;
using ItemId = Index<struct ItemTag>;

using Timestamp = std::int64_t;

/// Absolute tolerance separating real drift from rounding in matrix entries.
inline constexpr double kExactTolerance = 1e-12;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownIdError : public Error {
 public:
  using Error::Error;
};

class MissingEdgeError : public Error {
 public:
  using Error::Error;
};

// Dense matrices above the configured item cap.
class SizeLimitError : public Error {
 public:
  using Error::Error;
};

class InconsistencyError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SnapshotError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace dynrec

template <class Tag>
struct std::hash<dynrec::Index<Tag>> {
  std::size_t operator()(dynrec::Index<Tag> id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};
