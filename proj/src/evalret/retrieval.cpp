#include "cv4code/evalret/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cv4code/common/error.hpp"
#include "cv4code/common/parallel.hpp"

namespace cv4code::evalret {

namespace {

template <typename T>
std::vector<double> normalized(std::span<const T> v, std::size_t dim) {
  if (v.size() != dim) throw Error("ShapeMismatch", "expected " + std::to_string(dim) + " values");
  double norm = 0;
  for (T x : v) norm += double(x) * double(x);
  if (norm == 0) throw Error("ZeroVector", "cannot index a zero vector");
  norm = std::sqrt(norm);
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= norm;
  return out;
}

}  // namespace

void EmbeddingIndex::add(std::string id, std::span<const float> vector) { insert(std::move(id), normalized(vector, dim_)); }

void EmbeddingIndex::add(std::string id, std::span<const double> vector) {
  insert(std::move(id), normalized(vector, dim_));
}

void EmbeddingIndex::insert(std::string id, const std::vector<double>& v) {
  if (rows_.contains(id)) throw Error("DuplicateId", id);
  rows_.emplace(id, ids_.size());
  ids_.push_back(std::move(id));
  vectors_.insert(vectors_.end(), v.begin(), v.end());
}

std::optional<std::size_t> EmbeddingIndex::find(const std::string& id) const {
  const auto it = rows_.find(id);
  if (it == rows_.end()) return std::nullopt;
  return it->second;
}

double EmbeddingIndex::similarity(std::size_t a, std::size_t b) const {
  const auto x = row(a), y = row(b);
  double dot = 0;
  for (std::size_t i = 0; i < dim_; ++i) dot += x[i] * y[i];
  return dot;
}

std::vector<std::size_t> EmbeddingIndex::ranking(std::size_t query) const {
  std::vector<double> score(size());
  std::vector<std::size_t> order;
  order.reserve(size());
  for (std::size_t r = 0; r < size(); ++r) {
    if (r == query) continue;
    score[r] = similarity(query, r);
    order.push_back(r);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return ids_[a] < ids_[b];
  });
  return order;
}

RetrievalResult retrieve(const EmbeddingIndex& index, const std::string& query_id) {
  const auto q = index.find(query_id);
  if (!q) throw Error("UnknownId", query_id);
  RetrievalResult result{query_id, {}};
  for (std::size_t r : index.ranking(*q)) result.ranked.emplace_back(index.id(r), index.similarity(*q, r));
  return result;
}

std::vector<double> average_precision_at_r(const EmbeddingIndex& index, const corpus::RelevanceTable& relevance,
                                           std::size_t workers) {
  if (relevance.queries() != index.size()) {
    throw Error("ShapeMismatch", "relevance table and index differ in size");
  }
  for (std::size_t q = 0; q < relevance.queries(); ++q)
    if (relevance.r(q) == 0) throw Error("NoRelevant", "query " + index.id(q) + " has no relevant entry");
  std::vector<double> ap(index.size());
  parallel_for(index.size(), workers, [&](std::size_t q) {
    std::vector<bool> relevant(index.size(), false);
    for (std::size_t r : relevance.relevant[q]) relevant[r] = true;
    const std::size_t big_r = relevance.r(q);
    const auto ranked = index.ranking(q);
    double sum = 0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < big_r && i < ranked.size(); ++i) {
      if (!relevant[ranked[i]]) continue;
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
    ap[q] = sum / static_cast<double>(big_r);
  });
  return ap;
}

double map_at_r(const EmbeddingIndex& index, const corpus::RelevanceTable& relevance, std::size_t workers) {
  const auto ap = average_precision_at_r(index, relevance, workers);
  if (ap.empty()) return 0.0;
  return std::accumulate(ap.begin(), ap.end(), 0.0) / static_cast<double>(ap.size());
}

}  // namespace cv4code::evalret
