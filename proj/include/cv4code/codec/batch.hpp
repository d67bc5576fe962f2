#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "cv4code/codec/code_image.hpp"

namespace cv4code::codec {

inline constexpr std::size_t kGlobalMinSide = 12;
inline constexpr std::size_t kGlobalMaxSide = 96;

struct BatchGeometry {
  std::size_t height = kGlobalMaxSide;
  std::size_t width = kGlobalMaxSide;

  friend bool operator==(const BatchGeometry&, const BatchGeometry&) = default;
};

/// Per-minibatch geometry: nearest-rank percentile of heights and of widths,
/// each clamped to [global_min, global_max]. Percentile is in whole percent.
BatchGeometry batch_geometry(std::span<const std::pair<std::size_t, std::size_t>> sizes,
                             std::size_t global_min = kGlobalMinSide,
                             std::size_t global_max = kGlobalMaxSide,
                             unsigned percentile = 95);

/// Geometry of a single image at its own size, clamped to the global bounds.
BatchGeometry natural_geometry(const CodeImage& image,
                               std::size_t global_min = kGlobalMinSide,
                               std::size_t global_max = kGlobalMaxSide);

enum class EncodingMode { one_hot, index };

/// B x H x W x C dense batch, C = 96 (one-hot) or 1 (raw indices).
struct EncodedBatch {
  EncodingMode mode = EncodingMode::one_hot;
  std::size_t batch = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<float> data;
  /// Original (L, M) of each image before crop/pad.
  std::vector<std::pair<std::size_t, std::size_t>> sizes;

  Index index_at(std::size_t b, std::size_t h, std::size_t w) const;
};

/// Crops each image to the geometry, interleave-pads rows up to H, pads
/// columns with [blank] up to W, then encodes per mode.
EncodedBatch assemble_batch(std::span<const CodeImage> images, const BatchGeometry& geometry,
                            EncodingMode mode);

/// Crop + interleaved pad + constant pad for one image.
CodeImage fit_image(const CodeImage& image, const BatchGeometry& geometry);

}  // namespace cv4code::codec
