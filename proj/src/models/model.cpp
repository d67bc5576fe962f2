#include "cv4code/models/model.hpp"

#include <algorithm>
#include <cmath>

#include "cv4code/codec/alphabet.hpp"
#include "cv4code/codec/batch.hpp"
#include "cv4code/common/error.hpp"
#include "cv4code/tensor/ops.hpp"

namespace cv4code::models {

using namespace tensor;

std::size_t ModelInput::batch() const {
  return images.empty() ? features.size() / (codec::kAlphabetSize - 1) : images.size();
}

bool ModelInput::uniform() const {
  return std::all_of(images.begin(), images.end(), [&](const codec::CodeImage& im) {
    return im.height() == images.front().height() && im.width() == images.front().width();
  });
}

std::vector<float> char_frequencies(const codec::CodeImage& image) {
  std::vector<float> freq(codec::kAlphabetSize - 1, 0.0f);
  std::size_t total = 0;
  for (codec::Index c : image.cells()) {
    if (c == codec::kBlankIndex) continue;
    freq[c] += 1.0f;
    ++total;
  }
  if (total > 0)
    for (float& f : freq) f /= static_cast<float>(total);
  return freq;
}

ModelInput prepare_input(const ModelConfig& config, std::span<const codec::CodeImage> images, Phase phase) {
  if (images.empty()) throw Error("ShapeMismatch", "empty batch");
  ModelInput input;
  if (config.kind == ModelKind::boc_mlp) {
    for (const auto& im : images) {
      const auto f = char_frequencies(im);
      input.features.insert(input.features.end(), f.begin(), f.end());
    }
    return input;
  }
  input.images.reserve(images.size());
  if (config.kind != ModelKind::cct) {
    const codec::BatchGeometry fixed{config.image_size, config.image_size};
    for (const auto& im : images) input.images.push_back(codec::fit_image(im, fixed));
  } else if (phase == Phase::train) {
    std::vector<std::pair<std::size_t, std::size_t>> sizes;
    for (const auto& im : images) sizes.emplace_back(im.height(), im.width());
    const auto geometry = codec::batch_geometry(sizes, codec::kGlobalMinSide, config.image_size);
    for (const auto& im : images) input.images.push_back(codec::fit_image(im, geometry));
  } else {
    for (const auto& im : images)
      input.images.push_back(codec::fit_image(im, codec::natural_geometry(im, codec::kGlobalMinSide, config.image_size)));
  }
  return input;
}

std::vector<std::uint8_t> index_cells(const ModelInput& input) {
  if (input.images.empty() || !input.uniform()) throw Error("ShapeMismatch", "index_cells needs uniform images");
  std::vector<std::uint8_t> cells;
  cells.reserve(input.images.size() * input.images.front().cells().size());
  for (const auto& im : input.images) cells.insert(cells.end(), im.cells().begin(), im.cells().end());
  return cells;
}

// --- ParameterStore ----------------------------------------------------------

template <typename T>
void ParameterStore<T>::claim(const std::string& name) {
  if (std::find(names_.begin(), names_.end(), name) != names_.end()) {
    throw Error("InvalidConfig", "duplicate parameter name " + name);
  }
  names_.push_back(name);
}

template <typename T>
Var<T> ParameterStore<T>::add(const std::string& name, Tensor<T> value) {
  claim(name);
  Var<T> v(std::move(value), true);
  params_.push_back({name, v});
  return v;
}

template <typename T>
Var<T> ParameterStore<T>::uniform(const std::string& name, Shape shape, std::size_t fan_in) {
  Tensor<T> t(std::move(shape));
  const double bound = std::sqrt(3.0 / static_cast<double>(fan_in));
  for (T& x : t.values()) x = static_cast<T>((2 * rng_.uniform() - 1) * bound);
  return add(name, std::move(t));
}

template <typename T>
Var<T> ParameterStore<T>::normal(const std::string& name, Shape shape, double stddev) {
  Tensor<T> t(std::move(shape));
  for (T& x : t.values()) x = static_cast<T>(rng_.normal() * stddev);
  return add(name, std::move(t));
}

template <typename T>
Var<T> ParameterStore<T>::constant(const std::string& name, Shape shape, T value) {
  return add(name, Tensor<T>(std::move(shape), value));
}

template <typename T>
Tensor<T>& ParameterStore<T>::buffer(const std::string& name, Shape shape, T fill) {
  claim(name);
  buffers_.push_back({name, Tensor<T>(std::move(shape), fill)});
  return buffers_.back().value;
}

// --- Model -------------------------------------------------------------------

template <typename T>
Model<T>::Model(ModelConfig config, std::uint64_t seed)
    : config_(std::move(config)), store_(seed), dropout_rng_(seed ^ 0xd1b54a32d192ed03ULL) {
  validate(config_);
  const std::size_t dim = embedding_dim(config_);
  class_weights_ = store_.uniform("head.class_weights", {config_.n_classes, dim}, dim);
}

template <typename T>
Var<T> Model<T>::embed(const ModelInput& input, Phase phase) {
  if (input.batch() == 0) throw Error("ShapeMismatch", "empty batch");
  return embed_impl(input, phase);
}

template <typename T>
Var<T> Model<T>::logits_from_embedding(const Var<T>& embedding) {
  const Var<T> f = l2_normalize(head_features(embedding));
  const Var<T> w = l2_normalize(class_weights_);
  const std::size_t b = f.dim(0), d = f.dim(1);
  const Var<T> cos = bmm(reshape(f, {1, b, d}), reshape(w, {1, config_.n_classes, d}), false, true);
  return reshape(cos, {b, config_.n_classes});
}

template <typename T>
Var<T> Model<T>::forward(const ModelInput& input, Phase phase) {
  return logits_from_embedding(embed(input, phase));
}

template <typename T>
std::vector<Var<T>> Model<T>::parameter_vars() const {
  std::vector<Var<T>> out;
  for (const auto& p : parameters()) out.push_back(p.var);
  return out;
}

template <typename T>
std::size_t Model<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.var.value().size();
  return n;
}

template <typename T>
void Model<T>::zero_grad() {
  for (auto p : parameter_vars()) p.zero_grad();
}

// --- shared blocks -----------------------------------------------------------

template <typename T>
Var<T> pad_token_sequence(const Var<T>& tokens, std::size_t target, const Var<T>& pad) {
  const std::size_t b = tokens.dim(0), t = tokens.dim(1), d = tokens.dim(2);
  if (target < t) {
    throw Error("TargetTooSmall", "cannot pad " + std::to_string(t) + " tokens to " + std::to_string(target));
  }
  if (pad.shape() != Shape{d}) throw Error("ShapeMismatch", "pad embedding must be [" + std::to_string(d) + "]");
  if (target == t) return tokens;
  return concat<T>({tokens, expand(pad, {b, target - t})}, 1);
}

template <typename T>
Var<T> sequence_pool(const Var<T>& tokens, const Var<T>& weight) {
  const std::size_t b = tokens.dim(0), t = tokens.dim(1), d = tokens.dim(2);
  const Var<T> scores = reshape(matmul(tokens, weight), {b, t});
  const Var<T> a = reshape(softmax(scores), {b, 1, t});
  return reshape(bmm(a, tokens), {b, d});
}

template <typename T>
Tensor<T> sinusoidal_positions(std::size_t tokens, std::size_t dim) {
  Tensor<T> pe({tokens, dim});
  for (std::size_t t = 0; t < tokens; ++t)
    for (std::size_t i = 0; i < dim; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(i - i % 2) / static_cast<double>(dim));
      const double angle = static_cast<double>(t) * freq;
      pe[t * dim + i] = static_cast<T>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  return pe;
}

template <typename T>
Var<T> shifted_patch_tokenize(const ModelInput& input, std::size_t patch, const Var<T>& char_table) {
  const auto cells = index_cells(input);
  const std::size_t b = input.images.size(), h = input.images.front().height(), w = input.images.front().width();
  std::vector<std::size_t> idx(cells.begin(), cells.end());
  const std::size_t e = char_table.dim(1);
  const Var<T> image = reshape(embedding<T>(idx, char_table), {b, h, w, e});
  const long half = static_cast<long>(patch / 2);
  std::vector<Var<T>> parts{image};
  for (long dy : {-half, half})
    for (long dx : {-half, half}) parts.push_back(shift2d(image, dy, dx));
  return patchify(concat(parts, 3), patch);
}

std::size_t conv_tokenizer_side(std::size_t side, const std::vector<ConvSpec>& tokenizer) {
  for (const auto& conv : tokenizer) {
    side = (side + conv.stride - 1) / conv.stride;
    if (side < 2) return 0;
    side = (side - 2) / 2 + 1;
  }
  return side;
}

std::size_t visual_tokens(const ModelConfig& config, std::size_t side) {
  switch (config.kind) {
    case ModelKind::vit:
    case ModelKind::vit_fsd:
      return (side / config.patch) * (side / config.patch);
    case ModelKind::cct: {
      const std::size_t s = conv_tokenizer_side(side, config.tokenizer);
      return s * s;
    }
    default:
      return 0;
  }
}

template class ParameterStore<float>;
template class ParameterStore<double>;
template class Model<float>;
template class Model<double>;

#define CV4CODE_INSTANTIATE_BLOCKS(T)                                                          \
  template Var<T> pad_token_sequence(const Var<T>&, std::size_t, const Var<T>&);              \
  template Var<T> sequence_pool(const Var<T>&, const Var<T>&);                                \
  template Tensor<T> sinusoidal_positions(std::size_t, std::size_t);                          \
  template Var<T> shifted_patch_tokenize(const ModelInput&, std::size_t, const Var<T>&);

CV4CODE_INSTANTIATE_BLOCKS(float)
CV4CODE_INSTANTIATE_BLOCKS(double)

}  // namespace cv4code::models
