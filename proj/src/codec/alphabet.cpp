#include "cv4code/codec/alphabet.hpp"

#include <string_view>

namespace cv4code::codec {

namespace {

// Listing order; index = position. [space] follows, [blank] is last.
constexpr std::string_view kListing =
    "abcdefghijklmnopqrstuvwxyz"
    "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    "0123456789"
    "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{}|~"
    " ";

static_assert(kListing.size() == kAlphabetSize - 1);

}  // namespace

Alphabet::Alphabet() {
  for (std::size_t i = 0; i < kListing.size(); ++i) {
    symbols_[i] = kListing[i];
    by_char_[static_cast<unsigned char>(kListing[i]) - 32] = static_cast<Index>(i);
  }
}

std::optional<char> Alphabet::char_at(Index index) const {
  if (index >= kBlankIndex) return std::nullopt;
  return symbols_[index];
}

std::string Alphabet::name(Index index) const {
  if (index == kBlankIndex) return "[blank]";
  if (index == kSpaceIndex) return "[space]";
  if (index > kBlankIndex) return "[invalid]";
  return std::string(1, symbols_[index]);
}

Alphabet build_alphabet() { return Alphabet{}; }

const Alphabet& alphabet() {
  static const Alphabet instance;
  return instance;
}

}  // namespace cv4code::codec
