#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cv4code/codec/code_image.hpp"
#include "cv4code/common/rng.hpp"
#include "cv4code/models/config.hpp"
#include "cv4code/tensor/autograd.hpp"

namespace cv4code::models {

using tensor::Shape;
using tensor::Tensor;
using tensor::Var;

enum class Phase { train, eval };

/// Model-ready batch. Images are already cropped/padded; they share one size
/// except in cct evaluation, where each keeps its own.
struct ModelInput {
  std::vector<codec::CodeImage> images;
  /// boc-mlp only: B x 95 relative character frequencies.
  std::vector<float> features;

  std::size_t batch() const;
  bool uniform() const;
};

/// Relative frequency of each non-blank symbol (95 values summing to 1,
/// all zero for an image of only blanks).
std::vector<float> char_frequencies(const codec::CodeImage& image);

/// Fits full-size code images to what `config` consumes: image_size squared
/// for resnet/vit, the batch's percentile geometry for cct training, each
/// image's own size (clamped) for cct evaluation, frequencies for boc-mlp.
ModelInput prepare_input(const ModelConfig& config, std::span<const codec::CodeImage> images, Phase phase);

template <typename T>
struct Parameter {
  std::string name;
  Var<T> var;
};

template <typename T>
struct Buffer {
  std::string name;
  Tensor<T> value;
};

/// Owns named trainable parameters and non-trainable buffers. Initial values
/// come from one seeded stream in registration order.
template <typename T>
class ParameterStore {
 public:
  explicit ParameterStore(std::uint64_t seed) : rng_(seed) {}

  /// Uniform in +-sqrt(3 / fan_in) (unit-variance preserving).
  Var<T> uniform(const std::string& name, Shape shape, std::size_t fan_in);
  Var<T> normal(const std::string& name, Shape shape, double stddev);
  Var<T> constant(const std::string& name, Shape shape, T value);
  /// Stable reference for the life of the store.
  Tensor<T>& buffer(const std::string& name, Shape shape, T fill);

  const std::vector<Parameter<T>>& parameters() const { return params_; }
  std::deque<Buffer<T>>& buffers() { return buffers_; }
  const std::deque<Buffer<T>>& buffers() const { return buffers_; }

 private:
  Var<T> add(const std::string& name, Tensor<T> value);
  void claim(const std::string& name);

  SplitMix64 rng_;
  std::vector<Parameter<T>> params_;
  std::deque<Buffer<T>> buffers_;
  std::vector<std::string> names_;
};

template <typename T>
class Model {
 public:
  Model(ModelConfig config, std::uint64_t seed);
  virtual ~Model() = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return config_; }

  /// B x embedding_dim code embeddings.
  Var<T> embed(const ModelInput& input, Phase phase);
  /// Unscaled cosines between head features and every class weight, B x n_classes.
  Var<T> forward(const ModelInput& input, Phase phase);
  /// Cosine logits from embed() output.
  Var<T> logits_from_embedding(const Var<T>& embedding);

  const std::vector<Parameter<T>>& parameters() const { return store_.parameters(); }
  std::vector<Var<T>> parameter_vars() const;
  std::deque<Buffer<T>>& buffers() { return store_.buffers(); }
  const std::deque<Buffer<T>>& buffers() const { return store_.buffers(); }
  std::size_t parameter_count() const;
  void zero_grad();

  /// Dropout stream; part of the training state.
  SplitMix64& dropout_rng() { return dropout_rng_; }

 protected:
  virtual Var<T> embed_impl(const ModelInput& input, Phase phase) = 0;
  /// Features fed to the class head; identity unless the architecture
  /// applies an activation after its embedding point.
  virtual Var<T> head_features(const Var<T>& embedding) { return embedding; }

  ParameterStore<T>& store() { return store_; }

 private:
  ModelConfig config_;
  ParameterStore<T> store_;
  SplitMix64 dropout_rng_;
  Var<T> class_weights_;
};

/// Throws InvalidConfig.
template <typename T>
std::unique_ptr<Model<T>> build_model(const ModelConfig& config, std::uint64_t seed);

// Building blocks shared by the architectures, exposed for testing.

/// Appends copies of `pad` ([D]) to [B, T, D] tokens up to target length.
/// Throws TargetTooSmall.
template <typename T>
Var<T> pad_token_sequence(const Var<T>& tokens, std::size_t target, const Var<T>& pad);

/// softmax_t(tokens . w)-weighted sum of tokens: [B, T, D], w [D, 1] -> [B, D].
/// (A score bias would cancel in the softmax.)
template <typename T>
Var<T> sequence_pool(const Var<T>& tokens, const Var<T>& weight);

/// Fixed sin/cos position signal, [tokens, dim].
template <typename T>
Tensor<T> sinusoidal_positions(std::size_t tokens, std::size_t dim);

/// Index images -> character embeddings -> the image plus four half-patch
/// diagonal shifts, concatenated on channels -> patches: [B, T, p*p*5*E].
template <typename T>
Var<T> shifted_patch_tokenize(const ModelInput& input, std::size_t patch, const Var<T>& char_table);

/// Conv/ReLU/max-pool stack output grid side for one input side.
std::size_t conv_tokenizer_side(std::size_t side, const std::vector<ConvSpec>& tokenizer);

/// Visual tokens a transformer variant sees for a square input, excluding
/// any class token.
std::size_t visual_tokens(const ModelConfig& config, std::size_t side);

/// Flattens uniform images into B x H x W indices.
std::vector<std::uint8_t> index_cells(const ModelInput& input);

extern template class Model<float>;
extern template class Model<double>;

}  // namespace cv4code::models
