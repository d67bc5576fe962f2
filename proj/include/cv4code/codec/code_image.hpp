#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cv4code/codec/alphabet.hpp"

namespace cv4code::codec {

/// An L x M grid of alphabet indices, row-major.
class CodeImage {
 public:
  CodeImage() = default;
  CodeImage(std::size_t height, std::size_t width, std::vector<Index> cells);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  bool empty() const { return cells_.empty(); }

  Index at(std::size_t row, std::size_t col) const { return cells_[row * width_ + col]; }
  std::span<const Index> row(std::size_t r) const {
    return std::span<const Index>(cells_).subspan(r * width_, width_);
  }
  std::span<const Index> cells() const { return cells_; }

  friend bool operator==(const CodeImage&, const CodeImage&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<Index> cells_;
};

inline constexpr unsigned kDefaultTabWidth = 4;

/// Splits raw bytes into lines (LF or CRLF), expands tabs to the next
/// multiple of `tab_width` output columns (tab_width 0 drops tabs), and
/// removes every byte outside printable ASCII. A trailing line terminator
/// does not open an extra empty line.
std::vector<std::string> normalize_text(std::string_view raw,
                                        unsigned tab_width = kDefaultTabWidth);

/// Maps filtered lines to indices, right-padding with [blank] to the longest
/// line. Throws Error("EmptySource") when there is no character at all.
CodeImage encode_image(std::span<const std::string> lines);

/// normalize_text followed by encode_image.
CodeImage encode_source(std::string_view raw, unsigned tab_width = kDefaultTabWidth);

/// Renders an image back to text; [blank] cells are dropped, so lines lose
/// synthetic padding but keep source spaces.
std::vector<std::string> decode_image(const CodeImage& image);

/// Top-left max_h x max_w corner.
CodeImage crop_image(const CodeImage& image, std::size_t max_h, std::size_t max_w);

/// Inserts target_h - L blank rows: each of the L gaps following an original
/// row gets floor(P/L) rows, the first P mod L gaps get one more.
CodeImage interleaved_pad(const CodeImage& image, std::size_t target_h);

/// Appends blank columns on the right up to target_w.
CodeImage constant_pad_width(const CodeImage& image, std::size_t target_w);

// Binary image format: "CV4C", u16 version, u32 height, u32 width, then
// height*width index bytes, little-endian, row-major.
inline constexpr std::uint16_t kImageFormatVersion = 1;

void write_image(std::ostream& out, const CodeImage& image);
CodeImage read_image(std::istream& in);
void save_image(const std::filesystem::path& path, const CodeImage& image);
CodeImage load_image(const std::filesystem::path& path);

}  // namespace cv4code::codec
