#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace cv4code::models {

enum class ModelKind { resnet, vit, vit_fsd, cct, boc_mlp };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

/// One convolution of a stack: kernel x kernel, `channels` filters, stride.
struct ConvSpec {
  std::size_t kernel = 3;
  std::size_t channels = 64;
  std::size_t stride = 1;
  friend bool operator==(const ConvSpec&, const ConvSpec&) = default;
};

enum class PositionEncoding { learnable, sinusoidal, none };

struct ModelConfig {
  ModelKind kind = ModelKind::cct;
  std::size_t n_classes = 237;
  std::size_t image_size = 96;

  // transformer variants
  std::size_t depth = 8;
  std::size_t hidden = 128;
  std::size_t mlp = 512;
  std::size_t heads = 4;
  double dropout = 0.1;
  std::size_t patch = 16;           // vit, vit-fsd
  std::size_t char_embed = 32;      // vit-fsd
  std::vector<ConvSpec> tokenizer;  // cct; each conv is followed by a 2x2/2 max pool
  PositionEncoding position = PositionEncoding::sinusoidal;

  // resnet
  std::size_t stem = 16;
  std::vector<ConvSpec> stages;  // channels and stride per stage, kernel 3
  std::size_t blocks_per_stage = 2;
  std::size_t shortcut_kernel = 3;
  std::size_t bottleneck = 128;

  // boc-mlp
  std::vector<std::size_t> layers;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Throws InvalidConfig on inconsistent fields.
void validate(const ModelConfig& config);

/// Flat `key = value` text; `#` starts a comment. Keys not set keep the
/// defaults of the config's kind. Unknown keys throw InvalidConfig.
ModelConfig parse_model_config(const std::string& text);
std::string format_model_config(const ModelConfig& config);
ModelConfig load_model_config(const std::filesystem::path& path);

/// Named table variants: resnet, vit-s, vit-l, vit-fsd-s, vit-fsd-l, cct-s,
/// cct-l, boc-mlp, plus the small cct-tiny used for tests and smoke runs.
ModelConfig canonical_config(const std::string& name, std::size_t n_classes = 237);
std::vector<std::string> canonical_names();

/// Dimension of embed() outputs.
std::size_t embedding_dim(const ModelConfig& config);

}  // namespace cv4code::models
