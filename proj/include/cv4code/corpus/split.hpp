#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cv4code/corpus/manifest.hpp"

namespace cv4code::corpus {

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

/// Per-problem stratified assignment. Each problem's entries are shuffled
/// with a SplitMix64 seeded from (seed, problem_id); test and validation get
/// max(1, round_half_even(ratio * n)) samples, train the remainder.
/// Throws TooFewSamples when a problem has fewer than 3 entries.
std::vector<ManifestEntry> stratified_split(std::vector<ManifestEntry> entries,
                                            const SplitRatios& ratios, std::uint64_t seed);

struct SimSet {
  std::vector<ManifestEntry> entries;
  std::set<std::string> problems;
  std::size_t per_problem_count = 0;  // per language
};

/// Samples n_problems problems with at least `per_problem_per_language`
/// test entries in every requested language, then that many entries per
/// language. Throws InsufficientSamples naming a deficient problem/language.
SimSet build_sim_set(std::span<const ManifestEntry> test_entries, std::size_t n_problems,
                     std::size_t per_problem_per_language,
                     std::span<const std::string> languages, std::uint64_t seed);

/// Rebuilds a SimSet from entries previously written as a manifest.
SimSet sim_set_from_entries(std::vector<ManifestEntry> entries);

/// relevant[q] = indices of entries sharing q's problem, q excluded.
struct RelevanceTable {
  std::vector<std::vector<std::size_t>> relevant;

  std::size_t queries() const { return relevant.size(); }
  std::size_t r(std::size_t q) const { return relevant[q].size(); }
};

RelevanceTable one_vs_all_pairs(const SimSet& sim);

/// Same construction from bare labels.
RelevanceTable one_vs_all_pairs(std::span<const std::string> labels);

}  // namespace cv4code::corpus
