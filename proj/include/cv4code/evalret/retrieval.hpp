#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cv4code/corpus/split.hpp"

namespace cv4code::evalret {

/// Exact cosine index. Rows are stored L2-normalized in double precision,
/// so a similarity is a plain dot product.
class EmbeddingIndex {
 public:
  explicit EmbeddingIndex(std::size_t dim) : dim_(dim) {}

  /// Throws DuplicateId, ZeroVector, ShapeMismatch.
  void add(std::string id, std::span<const float> vector);
  void add(std::string id, std::span<const double> vector);

  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return dim_; }
  const std::string& id(std::size_t row) const { return ids_[row]; }
  std::span<const double> row(std::size_t r) const { return {vectors_.data() + r * dim_, dim_}; }
  std::optional<std::size_t> find(const std::string& id) const;

  double similarity(std::size_t a, std::size_t b) const;

  /// Every row except `query`, by descending similarity then ascending id.
  std::vector<std::size_t> ranking(std::size_t query) const;

 private:
  void insert(std::string id, const std::vector<double>& unit);

  std::size_t dim_;
  std::vector<std::string> ids_;
  std::vector<double> vectors_;
  std::unordered_map<std::string, std::size_t> rows_;
};

struct RetrievalResult {
  std::string query;
  std::vector<std::pair<std::string, double>> ranked;
};

/// Throws UnknownId.
RetrievalResult retrieve(const EmbeddingIndex& index, const std::string& query_id);

/// AP@R of every query: the mean over the top R results of precision-at-i
/// at the relevant positions, R = the query's relevant count. Index row q
/// is query q of the table. Throws NoRelevant, ShapeMismatch.
std::vector<double> average_precision_at_r(const EmbeddingIndex& index, const corpus::RelevanceTable& relevance,
                                           std::size_t workers = 1);

/// Mean of average_precision_at_r.
double map_at_r(const EmbeddingIndex& index, const corpus::RelevanceTable& relevance, std::size_t workers = 1);

}  // namespace cv4code::evalret
