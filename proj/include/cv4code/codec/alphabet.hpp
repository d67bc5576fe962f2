#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

namespace cv4code::codec {

using Index = std::uint8_t;

inline constexpr std::size_t kAlphabetSize = 96;
inline constexpr Index kSpaceIndex = 94;
inline constexpr Index kBlankIndex = 95;

/// The 96-symbol codepoint vocabulary: lowercase, uppercase, digits, the 32
/// punctuation marks, [space] and the synthetic [blank] padding token.
class Alphabet {
 public:
  Alphabet();

  static constexpr std::size_t size() { return kAlphabetSize; }

  /// Index of a printable ASCII character, or nullopt for anything else.
  std::optional<Index> index_of(char c) const {
    const auto u = static_cast<unsigned char>(c);
    if (u < 32 || u > 126) return std::nullopt;
    return by_char_[u - 32];
  }

  /// Source character for indices 0..94. The blank index has no character.
  std::optional<char> char_at(Index index) const;

  /// Display name: the character itself, "[space]" or "[blank]".
  std::string name(Index index) const;

 private:
  std::array<char, kAlphabetSize - 1> symbols_{};
  std::array<Index, 95> by_char_{};
};

/// The fixed alphabet, in listing order.
Alphabet build_alphabet();

/// Shared immutable instance.
const Alphabet& alphabet();

}  // namespace cv4code::codec
