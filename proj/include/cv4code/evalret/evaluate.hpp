#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cv4code/codec/code_image.hpp"
#include "cv4code/corpus/manifest.hpp"
#include "cv4code/evalret/retrieval.hpp"
#include "cv4code/models/model.hpp"

namespace cv4code::evalret {

/// Evaluation-mode outputs for a set of full-size code images.
struct Evaluation {
  tensor::Tensor<float> embeddings;  // N x embedding_dim
  tensor::Tensor<float> cosines;     // N x n_classes
};

/// Runs the model in eval phase over fixed chunks of `chunk` images (the
/// chunking, not the worker count, decides every floating-point result).
/// cct models always take one image per chunk.
Evaluation evaluate(models::Model<float>& model, std::span<const codec::CodeImage> images, std::size_t workers = 1,
                    std::size_t chunk = 32);

/// Reads and encodes every entry's source file. Throws IoError, EmptySource.
std::vector<codec::CodeImage> load_images(std::span<const corpus::ManifestEntry> entries, std::size_t workers = 1);

// Embedding export: optional '#' header lines, then one record per entry,
// "id<TAB>problem_id<TAB>language<TAB>v1,...,vD" with 9 significant digits.
struct EmbeddingRecord {
  std::string id;
  std::string problem_id;
  std::string language;
  std::vector<float> vector;
};

void write_embeddings(std::ostream& out, std::span<const EmbeddingRecord> records);
/// Throws FormatError.
std::vector<EmbeddingRecord> read_embeddings(std::istream& in);

/// evaluate() + one record per entry, id = entry path.
std::vector<EmbeddingRecord> export_embeddings(models::Model<float>& model,
                                               std::span<const corpus::ManifestEntry> entries,
                                               std::span<const codec::CodeImage> images, std::size_t workers = 1);

EmbeddingIndex build_index(std::span<const EmbeddingRecord> records);

}  // namespace cv4code::evalret
