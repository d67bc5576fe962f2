#include "cv4code/codec/code_image.hpp"

#include <algorithm>
#include <fstream>

#include "cv4code/common/binary_io.hpp"
#include "cv4code/common/error.hpp"

namespace cv4code::codec {

CodeImage::CodeImage(std::size_t height, std::size_t width, std::vector<Index> cells)
    : height_(height), width_(width), cells_(std::move(cells)) {
  if (height_ == 0 || width_ == 0) throw Error("ShapeMismatch", "code image must be non-empty");
  if (cells_.size() != height_ * width_) {
    throw Error("ShapeMismatch", "cell count does not match height*width");
  }
  for (Index v : cells_) {
    if (v >= kAlphabetSize) throw Error("InvalidIndex", "cell value outside alphabet");
  }
}

std::vector<std::string> normalize_text(std::string_view raw, unsigned tab_width) {
  std::vector<std::string> lines;
  std::string current;
  std::size_t pos = 0;
  while (pos < raw.size()) {
    const char c = raw[pos++];
    if (c == '\n') {
      lines.push_back(std::move(current));
      current.clear();
    } else if (c == '\r' && pos < raw.size() && raw[pos] == '\n') {
      // CR of a CRLF pair; the LF closes the line on the next iteration.
    } else if (c == '\t') {
      if (tab_width > 0) {
        const std::size_t next_stop = (current.size() / tab_width + 1) * tab_width;
        current.append(next_stop - current.size(), ' ');
      }
    } else if (alphabet().index_of(c)) {
      current.push_back(c);
    }
  }
  if (!current.empty()) lines.push_back(std::move(current));
  return lines;
}

CodeImage encode_image(std::span<const std::string> lines) {
  std::size_t width = 0;
  for (const auto& line : lines) width = std::max(width, line.size());
  if (lines.empty() || width == 0) throw Error("EmptySource", "no valid characters in source");

  const Alphabet& abc = alphabet();
  std::vector<Index> cells(lines.size() * width, kBlankIndex);
  for (std::size_t r = 0; r < lines.size(); ++r) {
    Index* row = cells.data() + r * width;
    for (std::size_t c = 0; c < lines[r].size(); ++c) {
      const auto idx = abc.index_of(lines[r][c]);
      if (!idx) throw Error("InvalidCharacter", "line contains a character outside the alphabet");
      row[c] = *idx;
    }
  }
  return CodeImage(lines.size(), width, std::move(cells));
}

CodeImage encode_source(std::string_view raw, unsigned tab_width) {
  const auto lines = normalize_text(raw, tab_width);
  return encode_image(lines);
}

std::vector<std::string> decode_image(const CodeImage& image) {
  std::vector<std::string> lines;
  lines.reserve(image.height());
  const Alphabet& abc = alphabet();
  for (std::size_t r = 0; r < image.height(); ++r) {
    std::string line;
    for (Index v : image.row(r)) {
      if (auto c = abc.char_at(v)) line.push_back(*c);
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

CodeImage crop_image(const CodeImage& image, std::size_t max_h, std::size_t max_w) {
  if (max_h == 0 || max_w == 0) throw Error("ShapeMismatch", "crop limits must be positive");
  const std::size_t h = std::min(image.height(), max_h);
  const std::size_t w = std::min(image.width(), max_w);
  if (h == image.height() && w == image.width()) return image;
  std::vector<Index> cells;
  cells.reserve(h * w);
  for (std::size_t r = 0; r < h; ++r) {
    const auto row = image.row(r);
    cells.insert(cells.end(), row.begin(), row.begin() + static_cast<std::ptrdiff_t>(w));
  }
  return CodeImage(h, w, std::move(cells));
}

CodeImage interleaved_pad(const CodeImage& image, std::size_t target_h) {
  const std::size_t rows = image.height();
  if (target_h < rows) throw Error("ShapeMismatch", "interleaved pad target is below image height");
  if (target_h == rows) return image;
  const std::size_t extra = target_h - rows;
  const std::size_t base = extra / rows;
  const std::size_t remainder = extra % rows;
  const std::size_t w = image.width();

  std::vector<Index> cells;
  cells.reserve(target_h * w);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = image.row(r);
    cells.insert(cells.end(), row.begin(), row.end());
    const std::size_t gap = base + (r < remainder ? 1 : 0);
    cells.insert(cells.end(), gap * w, kBlankIndex);
  }
  return CodeImage(target_h, w, std::move(cells));
}

CodeImage constant_pad_width(const CodeImage& image, std::size_t target_w) {
  const std::size_t w = image.width();
  if (target_w < w) throw Error("ShapeMismatch", "constant pad target is below image width");
  if (target_w == w) return image;
  std::vector<Index> cells(image.height() * target_w, kBlankIndex);
  for (std::size_t r = 0; r < image.height(); ++r) {
    const auto row = image.row(r);
    std::copy(row.begin(), row.end(), cells.begin() + static_cast<std::ptrdiff_t>(r * target_w));
  }
  return CodeImage(image.height(), target_w, std::move(cells));
}

void write_image(std::ostream& out, const CodeImage& image) {
  out.write("CV4C", 4);
  binio::write_le<std::uint16_t>(out, kImageFormatVersion);
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(image.height()));
  binio::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(image.width()));
  const auto cells = image.cells();
  out.write(reinterpret_cast<const char*>(cells.data()), static_cast<std::streamsize>(cells.size()));
  if (!out) throw Error("IoError", "failed to write code image");
}

CodeImage read_image(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::string_view(magic, 4) != "CV4C") {
    throw Error("FormatError", "missing CV4C magic");
  }
  const auto version = binio::read_le<std::uint16_t>(in);
  if (version != kImageFormatVersion) throw Error("FormatError", "unsupported image format version");
  const auto h = binio::read_le<std::uint32_t>(in);
  const auto w = binio::read_le<std::uint32_t>(in);
  std::vector<Index> cells(static_cast<std::size_t>(h) * w);
  if (!in.read(reinterpret_cast<char*>(cells.data()), static_cast<std::streamsize>(cells.size()))) {
    throw Error("FormatError", "truncated image payload");
  }
  return CodeImage(h, w, std::move(cells));
}

void save_image(const std::filesystem::path& path, const CodeImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("IoError", "cannot open " + path.string());
  write_image(out, image);
}

CodeImage load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("IoError", "cannot open " + path.string());
  return read_image(in);
}

}  // namespace cv4code::codec
