#include <cmath>
#include <optional>

#include "cv4code/codec/alphabet.hpp"
#include "cv4code/codec/batch.hpp"
#include "cv4code/common/error.hpp"
#include "cv4code/models/model.hpp"
#include "cv4code/tensor/ops.hpp"

namespace cv4code::models {

using namespace tensor;

namespace {

template <typename T>
struct Linear {
  Var<T> w, b;
  Linear() = default;
  Linear(ParameterStore<T>& s, const std::string& name, std::size_t in, std::size_t out, bool bias = true)
      : w(s.uniform(name + ".w", {in, out}, in)) {
    if (bias) b = s.constant(name + ".b", {out}, T(0));
  }
  Var<T> operator()(const Var<T>& x) const { return b ? linear(x, w, b) : matmul(x, w); }
};

template <typename T>
struct LayerNorm {
  Var<T> gamma, beta;
  LayerNorm() = default;
  LayerNorm(ParameterStore<T>& s, const std::string& name, std::size_t dim)
      : gamma(s.constant(name + ".gamma", {dim}, T(1))), beta(s.constant(name + ".beta", {dim}, T(0))) {}
  Var<T> operator()(const Var<T>& x) const { return layer_norm(x, gamma, beta); }
};

template <typename T>
struct BatchNorm {
  Var<T> gamma, beta;
  Tensor<T>* mean = nullptr;
  Tensor<T>* var = nullptr;
  BatchNorm() = default;
  BatchNorm(ParameterStore<T>& s, const std::string& name, std::size_t dim)
      : gamma(s.constant(name + ".gamma", {dim}, T(1))),
        beta(s.constant(name + ".beta", {dim}, T(0))),
        mean(&s.buffer(name + ".running_mean", {dim}, T(0))),
        var(&s.buffer(name + ".running_var", {dim}, T(1))) {}
  Var<T> operator()(const Var<T>& x, Phase phase) const {
    return batch_norm(x, gamma, beta, *mean, *var, phase == Phase::train);
  }
};

template <typename T>
Var<T> maybe_dropout(const Var<T>& x, double p, Phase phase, SplitMix64& rng) {
  return phase == Phase::train && p > 0 ? dropout(x, p, rng) : x;
}

// Pre-norm encoder block: x + attn(LN x), then x + MLP(LN x).
template <typename T>
struct EncoderBlock {
  LayerNorm<T> ln1, ln2;
  Linear<T> q, k, v, proj, fc1, fc2;
  Var<T> temperature;  // locality self-attention only
  std::size_t heads = 1;

  EncoderBlock(ParameterStore<T>& s, const std::string& name, const ModelConfig& c, bool lsa)
      : ln1(s, name + ".ln1", c.hidden),
        ln2(s, name + ".ln2", c.hidden),
        q(s, name + ".attn.q", c.hidden, c.hidden),
        // A key bias shifts every score in a row equally, so softmax ignores it.
        k(s, name + ".attn.k", c.hidden, c.hidden, false),
        v(s, name + ".attn.v", c.hidden, c.hidden),
        proj(s, name + ".attn.proj", c.hidden, c.hidden),
        fc1(s, name + ".mlp.fc1", c.hidden, c.mlp),
        fc2(s, name + ".mlp.fc2", c.mlp, c.hidden),
        heads(c.heads) {
    if (lsa) {
      temperature = s.constant(name + ".attn.temperature", {1},
                               static_cast<T>(std::sqrt(static_cast<double>(c.hidden / c.heads))));
    }
  }

  Var<T> operator()(const Var<T>& x, double p, Phase phase, SplitMix64& rng) const {
    const Var<T> h = ln1(x);
    AttentionOptions<T> opts{.heads = heads, .mask_diagonal = static_cast<bool>(temperature)};
    const Var<T> a = attention(q(h), k(h), v(h), opts, temperature ? &temperature : nullptr);
    const Var<T> y = add(x, maybe_dropout(proj(a), p, phase, rng));
    const Var<T> m = fc2(gelu(fc1(ln2(y))));
    return add(y, maybe_dropout(m, p, phase, rng));
  }
};

template <typename T>
struct Encoder {
  std::vector<EncoderBlock<T>> blocks;
  LayerNorm<T> final_norm;

  Encoder(ParameterStore<T>& s, const ModelConfig& c, bool lsa) {
    for (std::size_t i = 0; i < c.depth; ++i) blocks.emplace_back(s, "encoder." + std::to_string(i), c, lsa);
    final_norm = LayerNorm<T>(s, "encoder.norm", c.hidden);
  }

  Var<T> operator()(Var<T> x, double p, Phase phase, SplitMix64& rng) const {
    for (const auto& block : blocks) x = block(x, p, phase, rng);
    return final_norm(x);
  }
};

void require_side(const ModelInput& input, std::size_t side, const char* model) {
  for (const auto& im : input.images) {
    if (im.height() != side || im.width() != side) {
      throw Error("ShapeMismatch", std::string(model) + " expects " + std::to_string(side) + "x" +
                                       std::to_string(side) + " images, got " + std::to_string(im.height()) + "x" +
                                       std::to_string(im.width()));
    }
  }
}

Shape bhw(const ModelInput& input) {
  return {input.images.size(), input.images.front().height(), input.images.front().width()};
}

// ---------------------------------------------------------------------------

template <typename T>
class ResNet final : public Model<T> {
 public:
  ResNet(const ModelConfig& c, std::uint64_t seed) : Model<T>(c, seed) {
    auto& s = this->store();
    stem_ = s.uniform("stem.conv", {7, 7, codec::kAlphabetSize, c.stem}, 49 * codec::kAlphabetSize);
    stem_bn_ = BatchNorm<T>(s, "stem.bn", c.stem);
    std::size_t in = c.stem;
    for (std::size_t st = 0; st < c.stages.size(); ++st) {
      for (std::size_t i = 0; i < c.blocks_per_stage; ++i) {
        const std::string name = "stage" + std::to_string(st + 1) + "." + std::to_string(i);
        const std::size_t out = c.stages[st].channels;
        Block b;
        b.stride = i == 0 ? c.stages[st].stride : 1;
        b.conv1 = s.uniform(name + ".conv1", {3, 3, in, out}, 9 * in);
        b.bn1 = BatchNorm<T>(s, name + ".bn1", out);
        b.conv2 = s.uniform(name + ".conv2", {3, 3, out, out}, 9 * out);
        b.bn2 = BatchNorm<T>(s, name + ".bn2", out);
        if (b.stride != 1 || in != out) {
          const std::size_t k = c.shortcut_kernel;
          b.shortcut = s.uniform(name + ".shortcut", {k, k, in, out}, k * k * in);
          b.shortcut_bn = BatchNorm<T>(s, name + ".shortcut_bn", out);
        }
        blocks_.push_back(std::move(b));
        in = out;
      }
    }
    fc_ = Linear<T>(s, "fc", in, c.bottleneck);
  }

 protected:
  Var<T> embed_impl(const ModelInput& input, Phase phase) override {
    require_side(input, this->config().image_size, "resnet");
    const auto cells = index_cells(input);
    Var<T> x = conv2d_one_hot<T>(cells, bhw(input), stem_, 2, Padding::same);
    x = maxpool2d(relu(stem_bn_(x, phase)), 3, 2);
    for (const auto& b : blocks_) {
      Var<T> y = relu(b.bn1(conv2d(x, b.conv1, b.stride, Padding::same), phase));
      y = b.bn2(conv2d(y, b.conv2, 1, Padding::same), phase);
      const Var<T> skip = b.shortcut ? b.shortcut_bn(conv2d(x, b.shortcut, b.stride, Padding::same), phase) : x;
      x = relu(add(y, skip));
    }
    if (x.dim(1) != x.dim(2)) throw Error("ShapeMismatch", "resnet feature map is not square");
    x = maxpool2d(x, x.dim(1), x.dim(1));
    return fc_(reshape(x, {x.dim(0), x.dim(3)}));
  }

  // The embedding is the bottleneck before its rectifier.
  Var<T> head_features(const Var<T>& embedding) override { return relu(embedding); }

 private:
  struct Block {
    std::size_t stride = 1;
    Var<T> conv1, conv2, shortcut;
    BatchNorm<T> bn1, bn2, shortcut_bn;
  };
  Var<T> stem_;
  BatchNorm<T> stem_bn_;
  std::vector<Block> blocks_;
  Linear<T> fc_;
};

// ---------------------------------------------------------------------------

template <typename T>
class VisionTransformer final : public Model<T> {
 public:
  VisionTransformer(const ModelConfig& c, std::uint64_t seed)
      : Model<T>(c, seed), fsd_(c.kind == ModelKind::vit_fsd) {
    auto& s = this->store();
    const std::size_t p = c.patch, tokens = visual_tokens(c, c.image_size);
    if (fsd_) {
      chars_ = s.normal("tokenizer.char_embed", {codec::kAlphabetSize, c.char_embed}, 0.02);
      const std::size_t patch_dim = p * p * 5 * c.char_embed;
      patch_norm_ = LayerNorm<T>(s, "tokenizer.norm", patch_dim);
      patch_proj_ = Linear<T>(s, "tokenizer.proj", patch_dim, c.hidden);
    } else {
      const std::size_t fan_in = p * p * codec::kAlphabetSize;
      patch_kernel_ = s.uniform("tokenizer.patch", {p, p, codec::kAlphabetSize, c.hidden}, fan_in);
      patch_bias_ = s.constant("tokenizer.patch_bias", {c.hidden}, T(0));
    }
    cls_ = s.normal("cls_token", {c.hidden}, 0.02);
    pos_ = s.normal("position", {tokens + 1, c.hidden}, 0.02);
    encoder_.emplace(s, c, fsd_);
  }

 protected:
  Var<T> embed_impl(const ModelInput& input, Phase phase) override {
    const auto& c = this->config();
    require_side(input, c.image_size, fsd_ ? "vit-fsd" : "vit");
    const std::size_t b = input.images.size(), tokens = visual_tokens(c, c.image_size);
    Var<T> x;
    if (fsd_) {
      x = patch_proj_(patch_norm_(shifted_patch_tokenize(input, c.patch, chars_)));
    } else {
      const auto cells = index_cells(input);
      x = conv2d_one_hot<T>(cells, bhw(input), patch_kernel_, c.patch, Padding::valid);
      x = add_broadcast(reshape(x, {b, tokens, c.hidden}), patch_bias_);
    }
    x = concat<T>({expand(cls_, {b, 1}), x}, 1);
    x = add_broadcast(x, pos_);
    x = maybe_dropout(x, c.dropout, phase, this->dropout_rng());
    x = (*encoder_)(x, c.dropout, phase, this->dropout_rng());
    return reshape(slice(x, 1, 0, 1), {b, c.hidden});
  }

 private:
  bool fsd_;
  Var<T> chars_, patch_kernel_, patch_bias_, cls_, pos_;
  LayerNorm<T> patch_norm_;
  Linear<T> patch_proj_;
  std::optional<Encoder<T>> encoder_;
};

// ---------------------------------------------------------------------------

template <typename T>
class CompactTransformer final : public Model<T> {
 public:
  CompactTransformer(const ModelConfig& c, std::uint64_t seed) : Model<T>(c, seed) {
    auto& s = this->store();
    std::size_t in = codec::kAlphabetSize;
    for (std::size_t i = 0; i < c.tokenizer.size(); ++i) {
      const auto& t = c.tokenizer[i];
      convs_.push_back(s.uniform("tokenizer.conv" + std::to_string(i), {t.kernel, t.kernel, in, t.channels},
                                 t.kernel * t.kernel * in));
      in = t.channels;
    }
    proj_ = Linear<T>(s, "tokenizer.proj", in, c.hidden);
    pad_ = s.normal("pad_token", {c.hidden}, 0.02);
    encoder_.emplace(s, c, false);
    pool_ = s.uniform("pool.w", {c.hidden, 1}, c.hidden);
  }

 protected:
  Var<T> embed_impl(const ModelInput& input, Phase phase) override {
    const auto& c = this->config();
    std::vector<Var<T>> sequences;
    std::size_t longest = 0;
    if (input.uniform()) {
      sequences.push_back(tokenize(input));
    } else {
      for (const auto& im : input.images) {
        ModelInput one;
        one.images.push_back(im);
        sequences.push_back(tokenize(one));
      }
    }
    for (const auto& t : sequences) longest = std::max(longest, t.dim(1));
    for (auto& t : sequences) t = pad_token_sequence(t, longest, pad_);
    Var<T> x = sequences.size() == 1 ? sequences.front() : concat(sequences, 0);
    if (c.position == PositionEncoding::sinusoidal) {
      x = add_broadcast(x, Var<T>(sinusoidal_positions<T>(longest, c.hidden)));
    }
    x = maybe_dropout(x, c.dropout, phase, this->dropout_rng());
    x = (*encoder_)(x, c.dropout, phase, this->dropout_rng());
    return sequence_pool(x, pool_);
  }

 private:
  // Conv stack on uniform images -> [B, T, D].
  Var<T> tokenize(const ModelInput& input) const {
    const auto& c = this->config();
    for (const auto& im : input.images) {
      if (im.height() < codec::kGlobalMinSide || im.width() < codec::kGlobalMinSide) {
        throw Error("InputTooSmall", "cct needs at least " + std::to_string(codec::kGlobalMinSide) +
                                         " rows and columns, got " + std::to_string(im.height()) + "x" +
                                         std::to_string(im.width()));
      }
    }
    const auto cells = index_cells(input);
    Var<T> x;
    for (std::size_t i = 0; i < convs_.size(); ++i) {
      const auto& t = c.tokenizer[i];
      x = i == 0 ? conv2d_one_hot<T>(cells, bhw(input), convs_[i], t.stride, Padding::same)
                 : conv2d(x, convs_[i], t.stride, Padding::same);
      if (x.dim(1) < 2 || x.dim(2) < 2) throw Error("InputTooSmall", "tokenizer grid collapsed below 2x2");
      x = maxpool2d(relu(x), 2, 2);
    }
    const std::size_t b = x.dim(0), tokens = x.dim(1) * x.dim(2);
    return proj_(reshape(x, {b, tokens, x.dim(3)}));
  }

  std::vector<Var<T>> convs_;
  Linear<T> proj_;
  Var<T> pad_, pool_;
  std::optional<Encoder<T>> encoder_;
};

// ---------------------------------------------------------------------------

template <typename T>
class BagOfCharacters final : public Model<T> {
 public:
  BagOfCharacters(const ModelConfig& c, std::uint64_t seed) : Model<T>(c, seed) {
    auto& s = this->store();
    std::size_t in = codec::kAlphabetSize - 1;
    for (std::size_t i = 0; i < c.layers.size(); ++i) {
      const std::string name = "fc" + std::to_string(i);
      layers_.push_back({Linear<T>(s, name, in, c.layers[i]), BatchNorm<T>(s, name + ".bn", c.layers[i])});
      in = c.layers[i];
    }
  }

 protected:
  Var<T> embed_impl(const ModelInput& input, Phase phase) override {
    const std::size_t n = codec::kAlphabetSize - 1;
    if (input.features.empty() || input.features.size() % n != 0) {
      throw Error("ShapeMismatch", "boc-mlp expects B x " + std::to_string(n) + " features");
    }
    const std::size_t b = input.features.size() / n;
    Var<T> x(Tensor<T>({b, n}, std::vector<T>(input.features.begin(), input.features.end())));
    for (const auto& [fc, bn] : layers_) x = relu(bn(fc(x), phase));
    return x;
  }

 private:
  std::vector<std::pair<Linear<T>, BatchNorm<T>>> layers_;
};

}  // namespace

template <typename T>
std::unique_ptr<Model<T>> build_model(const ModelConfig& config, std::uint64_t seed) {
  validate(config);
  switch (config.kind) {
    case ModelKind::resnet: return std::make_unique<ResNet<T>>(config, seed);
    case ModelKind::vit:
    case ModelKind::vit_fsd: return std::make_unique<VisionTransformer<T>>(config, seed);
    case ModelKind::cct: return std::make_unique<CompactTransformer<T>>(config, seed);
    case ModelKind::boc_mlp: return std::make_unique<BagOfCharacters<T>>(config, seed);
  }
  throw Error("InvalidConfig", "unknown model kind");
}

template std::unique_ptr<Model<float>> build_model(const ModelConfig&, std::uint64_t);
template std::unique_ptr<Model<double>> build_model(const ModelConfig&, std::uint64_t);

}  // namespace cv4code::models
