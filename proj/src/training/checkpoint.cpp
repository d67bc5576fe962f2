#include "cv4code/training/checkpoint.hpp"

#include <fstream>
#include <map>

#include "cv4code/common/binary_io.hpp"
#include "cv4code/common/error.hpp"

namespace cv4code::training {

namespace {

constexpr char kMagic[4] = {'C', 'V', '4', 'K'};
constexpr std::uint8_t kFloat32 = 1;

[[noreturn]] void bad(const std::string& what) { throw Error("FormatError", "checkpoint: " + what); }

const Tensor<float>& find(const std::map<std::string, const Tensor<float>*>& by_name, const std::string& name,
                          const tensor::Shape& shape) {
  const auto it = by_name.find(name);
  if (it == by_name.end()) bad("missing tensor " + name);
  if (it->second->shape() != shape) bad("tensor " + name + " has the wrong shape");
  return *it->second;
}

}  // namespace

Checkpoint capture(const models::Model<float>& model, const AdamState<float>* optimizer) {
  Checkpoint ckpt;
  ckpt.model_config = models::format_model_config(model.config());
  const auto& params = model.parameters();
  for (const auto& p : params) ckpt.tensors.push_back({p.name, p.var.value()});
  for (const auto& b : model.buffers()) ckpt.tensors.push_back({b.name, b.value});
  if (optimizer && !optimizer->m.empty()) {
    if (optimizer->m.size() != params.size()) throw Error("ShapeMismatch", "optimizer state does not match model");
    for (std::size_t i = 0; i < params.size(); ++i) ckpt.tensors.push_back({"adam.m/" + params[i].name, optimizer->m[i]});
    for (std::size_t i = 0; i < params.size(); ++i) ckpt.tensors.push_back({"adam.v/" + params[i].name, optimizer->v[i]});
  }
  if (optimizer) ckpt.optimizer_step = optimizer->step;
  return ckpt;
}

void restore(const Checkpoint& ckpt, models::Model<float>& model, AdamState<float>* optimizer) {
  std::map<std::string, const Tensor<float>*> by_name;
  for (const auto& t : ckpt.tensors) by_name[t.name] = &t.value;
  for (const auto& p : model.parameters()) {
    Var<float> v = p.var;
    v.mutable_value() = find(by_name, p.name, v.shape());
  }
  for (auto& b : model.buffers()) b.value = find(by_name, b.name, b.value.shape());
  if (!optimizer) return;
  optimizer->m.clear();
  optimizer->v.clear();
  optimizer->step = ckpt.optimizer_step;
  if (ckpt.optimizer_step == 0) return;
  for (const auto& p : model.parameters()) optimizer->m.push_back(find(by_name, "adam.m/" + p.name, p.var.shape()));
  for (const auto& p : model.parameters()) optimizer->v.push_back(find(by_name, "adam.v/" + p.name, p.var.shape()));
}

std::unique_ptr<models::Model<float>> model_from_checkpoint(const Checkpoint& ckpt) {
  auto model = models::build_model<float>(models::parse_model_config(ckpt.model_config), 0);
  restore(ckpt, *model, nullptr);
  return model;
}

void write_checkpoint(std::ostream& out, const Checkpoint& c) {
  using namespace binio;
  out.write(kMagic, 4);
  write_le<std::uint16_t>(out, kCheckpointFormatVersion);
  write_string(out, c.model_config);
  write_string(out, c.training_config);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.classes.size()));
  for (const auto& name : c.classes) write_string(out, name);
  write_le<std::uint64_t>(out, c.epoch);
  write_le<double>(out, c.val_top1);
  write_le<double>(out, c.best_val_top1);
  write_le<std::uint64_t>(out, c.shuffle_rng);
  write_le<std::uint64_t>(out, c.dropout_rng);
  write_le<std::uint64_t>(out, c.optimizer_step);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.tensors.size()));
  for (const auto& t : c.tensors) {
    write_string(out, t.name);
    write_le<std::uint8_t>(out, kFloat32);
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.value.rank()));
    for (std::size_t d : t.value.shape()) write_le<std::uint64_t>(out, d);
    for (float x : t.value.values()) write_le<float>(out, x);
  }
}

Checkpoint read_checkpoint(std::istream& in) {
  using namespace binio;
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kMagic)) bad("bad magic");
  if (const auto v = read_le<std::uint16_t>(in); v != kCheckpointFormatVersion) {
    bad("unsupported version " + std::to_string(v));
  }
  Checkpoint c;
  c.model_config = read_string(in);
  c.training_config = read_string(in);
  const auto n_classes = read_le<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n_classes; ++i) c.classes.push_back(read_string(in));
  c.epoch = read_le<std::uint64_t>(in);
  c.val_top1 = read_le<double>(in);
  c.best_val_top1 = read_le<double>(in);
  c.shuffle_rng = read_le<std::uint64_t>(in);
  c.dropout_rng = read_le<std::uint64_t>(in);
  c.optimizer_step = read_le<std::uint64_t>(in);
  const auto n_tensors = read_le<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    NamedTensor t;
    t.name = read_string(in);
    if (read_le<std::uint8_t>(in) != kFloat32) bad("tensor " + t.name + ": unsupported dtype");
    const auto rank = read_le<std::uint32_t>(in);
    if (rank > 8) bad("tensor " + t.name + ": rank " + std::to_string(rank));
    tensor::Shape shape;
    std::uint64_t count = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      shape.push_back(read_le<std::uint64_t>(in));
      count *= shape.back();
    }
    if (count > (std::uint64_t{1} << 32)) bad("tensor " + t.name + " is implausibly large");
    std::vector<float> values(count);
    for (float& x : values) x = read_le<float>(in);
    t.value = Tensor<float>(std::move(shape), std::move(values));
    c.tensors.push_back(std::move(t));
  }
  if (in.peek() != std::char_traits<char>::eof()) bad("trailing bytes");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("IoError", "cannot write " + path.string());
  write_checkpoint(out, ckpt);
  if (!out) throw Error("IoError", "failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("IoError", "cannot read " + path.string());
  return read_checkpoint(in);
}

}  // namespace cv4code::training
