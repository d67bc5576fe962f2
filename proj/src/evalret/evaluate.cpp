#include "cv4code/evalret/evaluate.hpp"

#include <charconv>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

#include "cv4code/common/error.hpp"
#include "cv4code/common/parallel.hpp"

namespace cv4code::evalret {

using tensor::Tensor;

Evaluation evaluate(models::Model<float>& model, std::span<const codec::CodeImage> images, std::size_t workers,
                    std::size_t chunk) {
  const std::size_t n = images.size(), dim = models::embedding_dim(model.config());
  const std::size_t classes = model.config().n_classes;
  Evaluation out{Tensor<float>({n, dim}), Tensor<float>({n, classes})};
  if (n == 0) return out;
  // CCT pads token sequences to the batch maximum; alone, each image's
  // embedding depends on nothing but itself.
  chunk = model.config().kind == models::ModelKind::cct ? 1 : std::max<std::size_t>(chunk, 1);
  parallel_for((n + chunk - 1) / chunk, workers, [&](std::size_t c) {
    tensor::NoGradGuard no_grad;
    const std::size_t begin = c * chunk, count = std::min(chunk, n - begin);
    const auto input = models::prepare_input(model.config(), images.subspan(begin, count), models::Phase::eval);
    const auto emb = model.embed(input, models::Phase::eval);
    const auto cos = model.logits_from_embedding(emb);
    std::copy(emb.value().values().begin(), emb.value().values().end(), out.embeddings.data() + begin * dim);
    std::copy(cos.value().values().begin(), cos.value().values().end(), out.cosines.data() + begin * classes);
  });
  return out;
}

std::vector<codec::CodeImage> load_images(std::span<const corpus::ManifestEntry> entries, std::size_t workers) {
  std::vector<codec::CodeImage> images(entries.size());
  parallel_for(entries.size(), workers, [&](std::size_t i) {
    try {
      images[i] = codec::encode_source(corpus::read_file(entries[i].path));
    } catch (const Error& e) {
      throw Error(e.kind(), entries[i].path + ": " + e.what());
    }
  });
  return images;
}

void write_embeddings(std::ostream& out, std::span<const EmbeddingRecord> records) {
  char buf[32];
  for (const auto& r : records) {
    out << r.id << '\t' << r.problem_id << '\t' << r.language << '\t';
    for (std::size_t i = 0; i < r.vector.size(); ++i) {
      const auto res = std::to_chars(buf, buf + sizeof buf, r.vector[i], std::chars_format::general, 9);
      if (i) out << ',';
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  }
}

std::vector<EmbeddingRecord> read_embeddings(std::istream& in) {
  std::vector<EmbeddingRecord> records;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto bad = [&](const std::string& what) {
      return Error("FormatError", "embeddings line " + std::to_string(line_no) + ": " + what);
    };
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, '\t');) fields.push_back(f);
    if (fields.size() != 4) throw bad("expected 4 tab-separated fields");
    EmbeddingRecord r{fields[0], fields[1], fields[2], {}};
    const char* p = fields[3].data();
    const char* end = p + fields[3].size();
    while (p < end) {
      float v = 0;
      const auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc()) throw bad("bad number");
      r.vector.push_back(v);
      p = res.ptr;
      if (p < end && *p++ != ',') throw bad("expected ','");
    }
    if (!records.empty() && records.front().vector.size() != r.vector.size()) throw bad("inconsistent dimension");
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<EmbeddingRecord> export_embeddings(models::Model<float>& model,
                                               std::span<const corpus::ManifestEntry> entries,
                                               std::span<const codec::CodeImage> images, std::size_t workers) {
  if (entries.size() != images.size()) throw Error("ShapeMismatch", "one image per entry required");
  const auto eval = evaluate(model, images, workers);
  const std::size_t dim = eval.embeddings.dim(1);
  std::vector<EmbeddingRecord> records;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const float* row = eval.embeddings.data() + i * dim;
    records.push_back({entries[i].path, entries[i].problem_id, entries[i].language, {row, row + dim}});
  }
  return records;
}

EmbeddingIndex build_index(std::span<const EmbeddingRecord> records) {
  EmbeddingIndex index(records.empty() ? 0 : records.front().vector.size());
  for (const auto& r : records) index.add(r.id, std::span<const float>(r.vector));
  return index;
}

}  // namespace cv4code::evalret
