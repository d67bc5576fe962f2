#include "cv4code/models/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "cv4code/common/error.hpp"

namespace cv4code::models {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error("InvalidConfig", what); }

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, sep);) {
    item = trim(item);
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

std::size_t to_size(const std::string& key, const std::string& value) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) invalid(key + ": not an unsigned integer: " + value);
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double out = std::stod(value, &used);
    if (used == value.size()) return out;
  } catch (const std::exception&) {
  }
  invalid(key + ": not a number: " + value);
}

// "kernel:channels:stride" items.
std::vector<ConvSpec> parse_convs(const std::string& key, const std::string& value) {
  std::vector<ConvSpec> out;
  for (const auto& item : split(value, ',')) {
    const auto f = split(item, ':');
    if (f.size() != 3) invalid(key + ": expected kernel:channels:stride, got " + item);
    out.push_back({to_size(key, f[0]), to_size(key, f[1]), to_size(key, f[2])});
  }
  return out;
}

// "channels:stride" items, kernel fixed at 3.
std::vector<ConvSpec> parse_stages(const std::string& key, const std::string& value) {
  std::vector<ConvSpec> out;
  for (const auto& item : split(value, ',')) {
    const auto f = split(item, ':');
    if (f.size() != 2) invalid(key + ": expected channels:stride, got " + item);
    out.push_back({3, to_size(key, f[0]), to_size(key, f[1])});
  }
  return out;
}

PositionEncoding position_from_string(const std::string& s) {
  if (s == "learnable") return PositionEncoding::learnable;
  if (s == "sinusoidal") return PositionEncoding::sinusoidal;
  if (s == "none") return PositionEncoding::none;
  invalid("position: unknown encoding " + s);
}

std::string to_string(PositionEncoding p) {
  switch (p) {
    case PositionEncoding::learnable: return "learnable";
    case PositionEncoding::sinusoidal: return "sinusoidal";
    case PositionEncoding::none: return "none";
  }
  return "none";
}

ModelConfig kind_defaults(ModelKind kind) {
  ModelConfig c;
  c.kind = kind;
  switch (kind) {
    case ModelKind::resnet:
      c.stages = {{3, 64, 2}, {3, 128, 2}, {3, 256, 1}};
      break;
    case ModelKind::vit:
    case ModelKind::vit_fsd:
      c.position = PositionEncoding::learnable;
      break;
    case ModelKind::cct:
      c.tokenizer = {{7, 64, 2}, {7, 64, 2}};
      break;
    case ModelKind::boc_mlp:
      c.layers = {128, 256, 512};
      break;
  }
  return c;
}

template <typename T>
std::string join(const std::vector<T>& items, auto&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + fmt(items[i]);
  return out;
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::resnet: return "resnet";
    case ModelKind::vit: return "vit";
    case ModelKind::vit_fsd: return "vit-fsd";
    case ModelKind::cct: return "cct";
    case ModelKind::boc_mlp: return "boc-mlp";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
  for (auto k : {ModelKind::resnet, ModelKind::vit, ModelKind::vit_fsd, ModelKind::cct, ModelKind::boc_mlp})
    if (to_string(k) == name) return k;
  invalid("unknown model kind " + name);
}

void validate(const ModelConfig& c) {
  if (c.n_classes < 2) invalid("n_classes must be at least 2");
  switch (c.kind) {
    case ModelKind::vit:
    case ModelKind::vit_fsd:
      if (c.patch == 0 || c.image_size % c.patch != 0) invalid("patch must divide image_size");
      if (c.kind == ModelKind::vit_fsd && (c.patch % 2 != 0 || c.char_embed == 0))
        invalid("vit-fsd needs an even patch and a char_embed size");
      [[fallthrough]];
    case ModelKind::cct:
      if (c.hidden == 0 || c.heads == 0 || c.hidden % c.heads != 0) invalid("hidden must be divisible by heads");
      if (c.depth == 0 || c.mlp == 0) invalid("depth and mlp must be positive");
      if (c.dropout < 0 || c.dropout >= 1) invalid("dropout must be in [0, 1)");
      if (c.kind == ModelKind::cct && c.tokenizer.empty()) invalid("cct needs a tokenizer");
      if (c.kind == ModelKind::cct && c.position == PositionEncoding::learnable)
        invalid("cct token counts vary per batch; use sinusoidal or none");
      for (const auto& t : c.tokenizer)
        if (t.kernel == 0 || t.channels == 0 || t.stride == 0) invalid("tokenizer entries must be positive");
      break;
    case ModelKind::resnet:
      if (c.stem == 0 || c.stages.empty() || c.blocks_per_stage == 0 || c.bottleneck == 0)
        invalid("resnet needs stem, stages, blocks_per_stage and bottleneck");
      if (c.shortcut_kernel != 1 && c.shortcut_kernel != 3) invalid("shortcut_kernel must be 1 or 3");
      break;
    case ModelKind::boc_mlp:
      if (c.layers.empty()) invalid("boc-mlp needs layers");
      break;
  }
}

ModelConfig parse_model_config(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) invalid("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (!kv.emplace(key, trim(std::string_view(line).substr(eq + 1))).second) invalid("duplicate key " + key);
  }
  if (!kv.contains("kind")) invalid("missing kind");
  ModelConfig c = kind_defaults(model_kind_from_string(kv.at("kind")));
  for (const auto& [key, value] : kv) {
    if (key == "kind") continue;
    else if (key == "n_classes") c.n_classes = to_size(key, value);
    else if (key == "image_size") c.image_size = to_size(key, value);
    else if (key == "depth") c.depth = to_size(key, value);
    else if (key == "hidden") c.hidden = to_size(key, value);
    else if (key == "mlp") c.mlp = to_size(key, value);
    else if (key == "heads") c.heads = to_size(key, value);
    else if (key == "dropout") c.dropout = to_double(key, value);
    else if (key == "patch") c.patch = to_size(key, value);
    else if (key == "char_embed") c.char_embed = to_size(key, value);
    else if (key == "tokenizer") c.tokenizer = parse_convs(key, value);
    else if (key == "position") c.position = position_from_string(value);
    else if (key == "stem") c.stem = to_size(key, value);
    else if (key == "stages") c.stages = parse_stages(key, value);
    else if (key == "blocks_per_stage") c.blocks_per_stage = to_size(key, value);
    else if (key == "shortcut_kernel") c.shortcut_kernel = to_size(key, value);
    else if (key == "bottleneck") c.bottleneck = to_size(key, value);
    else if (key == "layers") {
      c.layers.clear();
      for (const auto& item : split(value, ',')) c.layers.push_back(to_size(key, item));
    } else {
      invalid("unknown key " + key);
    }
  }
  validate(c);
  return c;
}

std::string format_model_config(const ModelConfig& c) {
  std::ostringstream out;
  out << "kind = " << to_string(c.kind) << "\n";
  out << "n_classes = " << c.n_classes << "\n";
  out << "image_size = " << c.image_size << "\n";
  const auto conv = [](const ConvSpec& s) {
    return std::to_string(s.kernel) + ":" + std::to_string(s.channels) + ":" + std::to_string(s.stride);
  };
  switch (c.kind) {
    case ModelKind::vit:
    case ModelKind::vit_fsd:
    case ModelKind::cct:
      out << "depth = " << c.depth << "\nhidden = " << c.hidden << "\nmlp = " << c.mlp << "\nheads = " << c.heads
          << "\ndropout = " << c.dropout << "\nposition = " << to_string(c.position) << "\n";
      if (c.kind == ModelKind::cct) {
        out << "tokenizer = " << join(c.tokenizer, conv) << "\n";
      } else {
        out << "patch = " << c.patch << "\n";
        if (c.kind == ModelKind::vit_fsd) out << "char_embed = " << c.char_embed << "\n";
      }
      break;
    case ModelKind::resnet:
      out << "stem = " << c.stem << "\nstages = "
          << join(c.stages, [](const ConvSpec& s) { return std::to_string(s.channels) + ":" + std::to_string(s.stride); })
          << "\nblocks_per_stage = " << c.blocks_per_stage << "\nshortcut_kernel = " << c.shortcut_kernel
          << "\nbottleneck = " << c.bottleneck << "\n";
      break;
    case ModelKind::boc_mlp:
      out << "layers = " << join(c.layers, [](std::size_t n) { return std::to_string(n); }) << "\n";
      break;
  }
  return out.str();
}

ModelConfig load_model_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("IoError", "cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_model_config(text.str());
}

ModelConfig canonical_config(const std::string& name, std::size_t n_classes) {
  ModelConfig c;
  if (name == "resnet") {
    c = kind_defaults(ModelKind::resnet);
  } else if (name == "vit-s" || name == "vit-l") {
    c = kind_defaults(ModelKind::vit);
    c.patch = name == "vit-s" ? 16 : 8;
  } else if (name == "vit-fsd-s" || name == "vit-fsd-l") {
    c = kind_defaults(ModelKind::vit_fsd);
    c.patch = name == "vit-fsd-s" ? 16 : 8;
  } else if (name == "cct-s") {
    c = kind_defaults(ModelKind::cct);
  } else if (name == "cct-l") {
    c = kind_defaults(ModelKind::cct);
    c.tokenizer = {{3, 64, 1}, {3, 64, 1}, {3, 64, 1}};
  } else if (name == "cct-tiny") {
    c = kind_defaults(ModelKind::cct);
    c.tokenizer = {{3, 32, 1}, {3, 32, 1}};
    c.depth = 2;
    c.mlp = 256;
  } else if (name == "boc-mlp") {
    c = kind_defaults(ModelKind::boc_mlp);
  } else {
    invalid("unknown canonical config " + name);
  }
  c.n_classes = n_classes;
  validate(c);
  return c;
}

std::vector<std::string> canonical_names() {
  return {"resnet", "vit-s", "vit-l", "vit-fsd-s", "vit-fsd-l", "cct-s", "cct-l", "boc-mlp", "cct-tiny"};
}

std::size_t embedding_dim(const ModelConfig& c) {
  switch (c.kind) {
    case ModelKind::resnet: return c.bottleneck;
    case ModelKind::boc_mlp: return c.layers.back();
    default: return c.hidden;
  }
}

}  // namespace cv4code::models
