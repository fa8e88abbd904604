#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "jointnlu/corpus.hpp"

namespace jointnlu {

inline constexpr int kDefaultMaxCharLen = 20;

struct CharEncoding {
  std::vector<int> ids;  // max_char_len entries, 0-padded
  int true_len = 0;
};

/// Code-point indices of `token`, truncated to max_char_len. Characters
/// outside the training vocabulary map to kUnknownIndex.
CharEncoding char_encode(std::string_view token, const Vocabularies& vocab,
                         int max_char_len = kDefaultMaxCharLen);

/// Six binary surface features of a token, in this order.
struct WordFlags {
  static constexpr int kCount = 6;
  enum Index {
    kNumeric = 0,
    kStartsLower,
    kStartsUpper,
    kAllUpper,
    kContainsDigit,
    kContainsPunct
  };
  std::array<std::uint8_t, kCount> values{};

  std::uint8_t operator[](int i) const { return values[i]; }
  bool operator==(const WordFlags&) const = default;
};

/// all_upper requires every character to be an uppercase letter, so "U.S."
/// is not all-uppercase.
WordFlags word_flags(std::string_view token);

}  // namespace jointnlu
