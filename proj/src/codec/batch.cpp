#include "cv4code/codec/batch.hpp"

#include <algorithm>

#include "cv4code/common/error.hpp"

namespace cv4code::codec {

namespace {

std::size_t nearest_rank(std::vector<std::size_t> values, unsigned percentile) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  // ceil(percentile * n / 100), 1-based, at least 1.
  std::size_t rank = (static_cast<std::size_t>(percentile) * n + 99) / 100;
  rank = std::clamp<std::size_t>(rank, 1, n);
  return values[rank - 1];
}

}  // namespace

BatchGeometry batch_geometry(std::span<const std::pair<std::size_t, std::size_t>> sizes,
                             std::size_t global_min, std::size_t global_max,
                             unsigned percentile) {
  if (sizes.empty()) throw Error("EmptyBatch", "batch_geometry needs at least one size");
  if (global_min == 0 || global_min > global_max || percentile == 0 || percentile > 100) {
    throw Error("InvalidConfig", "bad geometry bounds or percentile");
  }
  std::vector<std::size_t> heights, widths;
  heights.reserve(sizes.size());
  widths.reserve(sizes.size());
  for (const auto& [h, w] : sizes) {
    heights.push_back(h);
    widths.push_back(w);
  }
  return {std::clamp(nearest_rank(std::move(heights), percentile), global_min, global_max),
          std::clamp(nearest_rank(std::move(widths), percentile), global_min, global_max)};
}

BatchGeometry natural_geometry(const CodeImage& image, std::size_t global_min,
                               std::size_t global_max) {
  return {std::clamp(image.height(), global_min, global_max),
          std::clamp(image.width(), global_min, global_max)};
}

Index EncodedBatch::index_at(std::size_t b, std::size_t h, std::size_t w) const {
  const std::size_t cell = (b * height + h) * width + w;
  if (mode == EncodingMode::index) return static_cast<Index>(data[cell]);
  const float* channels_at = data.data() + cell * channels;
  return static_cast<Index>(std::max_element(channels_at, channels_at + channels) - channels_at);
}

CodeImage fit_image(const CodeImage& image, const BatchGeometry& geometry) {
  CodeImage out = crop_image(image, geometry.height, geometry.width);
  out = interleaved_pad(out, geometry.height);
  return constant_pad_width(out, geometry.width);
}

EncodedBatch assemble_batch(std::span<const CodeImage> images, const BatchGeometry& geometry,
                            EncodingMode mode) {
  if (images.empty()) throw Error("EmptyBatch", "assemble_batch needs at least one image");
  EncodedBatch batch;
  batch.mode = mode;
  batch.batch = images.size();
  batch.height = geometry.height;
  batch.width = geometry.width;
  batch.channels = mode == EncodingMode::one_hot ? kAlphabetSize : 1;
  const std::size_t cells_per_image = geometry.height * geometry.width;
  batch.data.assign(batch.batch * cells_per_image * batch.channels, 0.0f);
  batch.sizes.reserve(images.size());

  for (std::size_t b = 0; b < images.size(); ++b) {
    if (images[b].empty()) throw Error("EmptySource", "cannot batch an empty code image");
    batch.sizes.emplace_back(images[b].height(), images[b].width());
    const CodeImage fitted = fit_image(images[b], geometry);
    const auto cells = fitted.cells();
    float* dst = batch.data.data() + b * cells_per_image * batch.channels;
    if (mode == EncodingMode::one_hot) {
      for (std::size_t i = 0; i < cells.size(); ++i) dst[i * kAlphabetSize + cells[i]] = 1.0f;
    } else {
      for (std::size_t i = 0; i < cells.size(); ++i) dst[i] = static_cast<float>(cells[i]);
    }
  }
  return batch;
}

}  // namespace cv4code::codec
