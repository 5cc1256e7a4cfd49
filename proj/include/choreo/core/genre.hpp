#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

#include "choreo/core/error.hpp"

namespace choreo {

inline constexpr std::size_t kGenreCount = 4;
inline constexpr std::array<std::string_view, kGenreCount> kGenreNames{"cha-cha", "rumba", "tango", "waltz"};

/// 1-based genre label, 1..kGenreCount.
class GenreId {
 public:
  constexpr GenreId() = default;
  explicit GenreId(int value) : value_(value) {
    if (value < 1 || value > static_cast<int>(kGenreCount)) {
      throw ValidationError("genre", "genre id " + std::to_string(value) + " outside 1.." +
                                         std::to_string(kGenreCount));
    }
  }
  static GenreId from_index(std::size_t index) { return GenreId(static_cast<int>(index) + 1); }

  int value() const { return value_; }
  std::size_t index() const { return static_cast<std::size_t>(value_ - 1); }
  std::string_view name() const { return kGenreNames[index()]; }

  friend bool operator==(GenreId, GenreId) = default;

 private:
  int value_ = 1;
};

}  // namespace choreo
