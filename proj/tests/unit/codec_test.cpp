#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "cv4code/codec/alphabet.hpp"
#include "cv4code/codec/batch.hpp"
#include "cv4code/codec/code_image.hpp"
#include "cv4code/common/error.hpp"
#include "../support/random_source.hpp"

using namespace cv4code;
using namespace cv4code::codec;

namespace {

CodeImage image_from(std::vector<std::vector<Index>> rows) {
  std::vector<Index> cells;
  for (auto& r : rows) cells.insert(cells.end(), r.begin(), r.end());
  return CodeImage(rows.size(), rows.front().size(), std::move(cells));
}

CodeImage filled(std::size_t h, std::size_t w, Index value) {
  return CodeImage(h, w, std::vector<Index>(h * w, value));
}

std::string expect_kind(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return "no-throw";
}

// Independent tab-stop oracle: pad with spaces until the column is a
// multiple of the width, always emitting at least one.
std::string expand_tabs_oracle(const std::string& line, unsigned width) {
  std::string out;
  for (char c : line) {
    if (c == '\t') {
      do out.push_back(' ');
      while (out.size() % width != 0);
    } else {
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace

TEST(Alphabet, ListingOrder) {
  const Alphabet abc = build_alphabet();
  EXPECT_EQ(abc.size(), 96u);
  EXPECT_EQ(*abc.index_of('a'), 0);
  EXPECT_EQ(*abc.index_of('z'), 25);
  EXPECT_EQ(*abc.index_of('A'), 26);
  EXPECT_EQ(*abc.index_of('0'), 52);
  EXPECT_EQ(*abc.index_of('!'), 62);
  EXPECT_EQ(*abc.index_of('~'), 93);
  EXPECT_EQ(*abc.index_of(' '), 94);
  EXPECT_EQ(abc.name(95), "[blank]");
  EXPECT_EQ(abc.name(94), "[space]");
  // the listing puts } before |
  EXPECT_EQ(*abc.index_of('{'), 90);
  EXPECT_EQ(*abc.index_of('}'), 91);
  EXPECT_EQ(*abc.index_of('|'), 92);
}

TEST(Alphabet, BijectionOverPrintableAscii) {
  const Alphabet& abc = alphabet();
  std::set<int> seen;
  for (int c = 32; c <= 126; ++c) {
    auto idx = abc.index_of(static_cast<char>(c));
    ASSERT_TRUE(idx.has_value());
    ASSERT_LT(*idx, 95);
    EXPECT_TRUE(seen.insert(*idx).second);
    EXPECT_EQ(*abc.char_at(*idx), static_cast<char>(c));
  }
  EXPECT_EQ(seen.size(), 95u);
  EXPECT_FALSE(abc.index_of('\t'));
  EXPECT_FALSE(abc.index_of('\x7f'));
  EXPECT_FALSE(abc.index_of(static_cast<char>(0xC3)));
  EXPECT_FALSE(abc.char_at(kBlankIndex));
}

TEST(NormalizeText, LineTerminators) {
  EXPECT_EQ(normalize_text("a\r\nb"), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(normalize_text("a\nb\n"), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(normalize_text("a\n\nb"), (std::vector<std::string>{"a", "", "b"}));
}

TEST(NormalizeText, RemovesNonPrintable) {
  EXPECT_EQ(normalize_text("a\xC3\xA9" "b"), (std::vector<std::string>{"ab"}));
  EXPECT_EQ(normalize_text("x\x01y\x7fz"), (std::vector<std::string>{"xyz"}));
}

TEST(NormalizeText, TabExpansion) {
  EXPECT_EQ(normalize_text("\tx", 4), (std::vector<std::string>{"    x"}));
  EXPECT_EQ(normalize_text("ab\tx", 4), (std::vector<std::string>{"ab  x"}));
  EXPECT_EQ(normalize_text("abcd\tx", 4), (std::vector<std::string>{"abcd    x"}));
  EXPECT_EQ(normalize_text("\tx", 0), (std::vector<std::string>{"x"}));

  SplitMix64 rng(7);
  for (int i = 0; i < 200; ++i) {
    std::string line;
    const auto len = rng.below(30);
    for (std::size_t k = 0; k < len; ++k) line.push_back(rng.below(5) == 0 ? '\t' : 'q');
    line.push_back('e');
    const unsigned width = 1 + static_cast<unsigned>(rng.below(8));
    ASSERT_EQ(normalize_text(line, width), std::vector<std::string>{expand_tabs_oracle(line, width)});
  }
}

TEST(EncodeImage, PadsToLongestLine) {
  const std::vector<std::string> ab_c{"ab", "c"};
  EXPECT_EQ(encode_image(ab_c), image_from({{0, 1}, {2, 95}}));
  const std::vector<std::string> a{"a"};
  EXPECT_EQ(encode_image(a), image_from({{0}}));
  const std::vector<std::string> empty_then_a{"", "a"};
  EXPECT_EQ(encode_image(empty_then_a), image_from({{95}, {0}}));
}

TEST(EncodeImage, EmptySource) {
  const std::vector<std::string> none;
  const std::vector<std::string> blanks{"", ""};
  EXPECT_EQ(expect_kind([&] { encode_image(none); }), "EmptySource");
  EXPECT_EQ(expect_kind([&] { encode_image(blanks); }), "EmptySource");
  EXPECT_EQ(expect_kind([&] { encode_source("\xff\xfe\n\n"); }), "EmptySource");
}

TEST(EncodeImage, SourceSpacesAreNotBlank) {
  const auto img = encode_source("a b\nc");
  EXPECT_EQ(img, image_from({{0, 94, 1}, {2, 95, 95}}));
}

TEST(CropImage, KeepsTopLeft) {
  std::vector<Index> cells(100 * 120);
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = static_cast<Index>(i % 96);
  const CodeImage big(100, 120, cells);
  const auto cropped = crop_image(big, 96, 96);
  ASSERT_EQ(cropped.height(), 96u);
  ASSERT_EQ(cropped.width(), 96u);
  for (std::size_t r = 0; r < 96; ++r)
    for (std::size_t c = 0; c < 96; ++c) ASSERT_EQ(cropped.at(r, c), big.at(r, c));

  const auto small = filled(10, 10, 3);
  EXPECT_EQ(crop_image(small, 96, 96), small);

  const auto wide = crop_image(filled(5, 200, 4), 96, 96);
  EXPECT_EQ(wide.height(), 5u);
  EXPECT_EQ(wide.width(), 96u);
}

TEST(InterleavedPad, DistributesBlankRows) {
  const auto two = image_from({{1, 2}, {3, 4}});
  EXPECT_EQ(interleaved_pad(two, 4), image_from({{1, 2}, {95, 95}, {3, 4}, {95, 95}}));
  EXPECT_EQ(interleaved_pad(two, 5), image_from({{1, 2}, {95, 95}, {95, 95}, {3, 4}, {95, 95}}));
  const auto three = image_from({{1}, {2}, {3}});
  EXPECT_EQ(interleaved_pad(three, 3), three);
  EXPECT_EQ(expect_kind([&] { interleaved_pad(three, 2); }), "ShapeMismatch");
}

TEST(BatchGeometry, NearestRankPercentile) {
  std::vector<std::pair<std::size_t, std::size_t>> sizes(20, {30, 40});
  sizes.emplace_back(200, 40);
  EXPECT_EQ(batch_geometry(sizes).height, 30u);

  std::vector<std::pair<std::size_t, std::size_t>> small(8, {10, 10});
  EXPECT_EQ(batch_geometry(small), (BatchGeometry{12, 12}));
  std::vector<std::pair<std::size_t, std::size_t>> large(8, {120, 120});
  EXPECT_EQ(batch_geometry(large), (BatchGeometry{96, 96}));

  // 20 images: rank ceil(19) = 19 -> the 19th smallest
  std::vector<std::pair<std::size_t, std::size_t>> ramp;
  for (std::size_t i = 1; i <= 20; ++i) ramp.emplace_back(10 + i, 90 - i);
  EXPECT_EQ(batch_geometry(ramp), (BatchGeometry{29, 88}));
}

TEST(AssembleBatch, OneHotSingleCell) {
  const std::vector<CodeImage> imgs{encode_source("a")};
  const auto batch = assemble_batch(imgs, {1, 1}, EncodingMode::one_hot);
  ASSERT_EQ(batch.data.size(), 96u);
  EXPECT_EQ(batch.data[0], 1.0f);
  for (std::size_t c = 1; c < 96; ++c) EXPECT_EQ(batch.data[c], 0.0f);
}

TEST(AssembleBatch, MixedSizesFitGeometry) {
  const std::vector<CodeImage> imgs{filled(2, 3, 5), filled(4, 2, 6)};
  const auto batch = assemble_batch(imgs, {4, 3}, EncodingMode::index);
  EXPECT_EQ(batch.batch, 2u);
  EXPECT_EQ(batch.height, 4u);
  EXPECT_EQ(batch.width, 3u);
  EXPECT_EQ(batch.data.size(), 2u * 4 * 3);
  EXPECT_EQ(batch.sizes[0], (std::pair<std::size_t, std::size_t>{2, 3}));
  EXPECT_EQ(batch.sizes[1], (std::pair<std::size_t, std::size_t>{4, 2}));
}

TEST(AssembleBatch, InterleaveThenConstantPad) {
  const std::vector<CodeImage> imgs{filled(2, 2, 0)};
  const auto batch = assemble_batch(imgs, {4, 2}, EncodingMode::index);
  const std::vector<float> expected{0, 0, 95, 95, 0, 0, 95, 95};
  EXPECT_EQ(batch.data, expected);
}

TEST(AssembleBatch, RandomPropertyCases) {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<CodeImage> imgs;
    const auto n = 1 + rng.below(4);
    for (std::size_t i = 0; i < n; ++i) {
      imgs.push_back(encode_source(test_support::random_source(rng, 40, 60)));
    }
    const BatchGeometry g{1 + rng.below(50), 1 + rng.below(50)};
    const auto batch = assemble_batch(imgs, g, EncodingMode::one_hot);
    ASSERT_EQ(batch.data.size(), n * g.height * g.width * 96);
    for (std::size_t cell = 0; cell < n * g.height * g.width; ++cell) {
      float sum = 0;
      int ones = 0;
      for (std::size_t c = 0; c < 96; ++c) {
        sum += batch.data[cell * 96 + c];
        ones += batch.data[cell * 96 + c] == 1.0f;
      }
      ASSERT_EQ(sum, 1.0f);
      ASSERT_EQ(ones, 1);
    }
    // surviving cells are unchanged; everything else is blank
    for (std::size_t b = 0; b < n; ++b) {
      const auto cropped = crop_image(imgs[b], g.height, g.width);
      std::size_t src_row = 0;
      for (std::size_t h = 0; h < g.height; ++h) {
        const bool blank_row = [&] {
          for (std::size_t w = 0; w < g.width; ++w)
            if (batch.index_at(b, h, w) != kBlankIndex) return false;
          return true;
        }();
        if (src_row < cropped.height() && !blank_row) {
          for (std::size_t w = 0; w < g.width; ++w) {
            const Index expected = w < cropped.width() ? cropped.at(src_row, w) : kBlankIndex;
            ASSERT_EQ(batch.index_at(b, h, w), expected);
          }
          ++src_row;
        } else if (src_row < cropped.height() && blank_row) {
          // either an inserted row or an all-blank source row; both are blank
          bool source_blank = true;
          for (Index v : cropped.row(src_row)) source_blank &= v == kBlankIndex;
          if (source_blank) ++src_row;
        }
      }
      ASSERT_EQ(src_row, cropped.height());
    }
  }
}

TEST(CodeImage, DecodeReencodeIsIdentity) {
  SplitMix64 rng(3);
  for (int i = 0; i < 300; ++i) {
    const auto img = encode_source(test_support::random_source(rng, 30, 50));
    auto lines = decode_image(img);
    // trailing source spaces survive decode, so re-encoding is exact
    EXPECT_EQ(encode_image(lines), img);
  }
}

TEST(CodeImage, ContentPreservation) {
  SplitMix64 rng(5);
  for (int i = 0; i < 300; ++i) {
    const auto src = test_support::random_source(rng, 20, 40);
    const auto lines = normalize_text(src);
    const auto img = encode_image(lines);
    std::string expected, got;
    for (const auto& l : lines) expected += l;
    for (Index v : img.cells())
      if (v != kBlankIndex) got.push_back(*alphabet().char_at(v));
    ASSERT_EQ(got, expected);
  }
}

TEST(ImageFormat, BitExactLayout) {
  const auto img = image_from({{0, 1, 2}, {95, 94, 93}});
  std::ostringstream out;
  write_image(out, img);
  const std::string bytes = out.str();
  const std::string expected("CV4C\x01\x00\x02\x00\x00\x00\x03\x00\x00\x00\x00\x01\x02\x5f\x5e\x5d", 20);
  EXPECT_EQ(bytes, expected);
  std::istringstream in(bytes);
  EXPECT_EQ(read_image(in), img);
}

TEST(ImageFormat, RejectsBadMagic) {
  std::istringstream in(std::string("XXXX\x01\x00", 6));
  EXPECT_EQ(expect_kind([&] { read_image(in); }), "FormatError");
}
