#include "cv4code/corpus/split.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <map>

#include "cv4code/common/error.hpp"
#include "cv4code/common/hash.hpp"
#include "cv4code/common/rng.hpp"

namespace cv4code::corpus {

namespace {

std::size_t round_half_even(double x) {
  const int previous = std::fegetround();
  std::fesetround(FE_TONEAREST);
  const double r = std::nearbyint(x);
  std::fesetround(previous);
  return static_cast<std::size_t>(r);
}

std::map<std::string, std::vector<std::size_t>> group_by_problem(
    std::span<const ManifestEntry> entries) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < entries.size(); ++i) groups[entries[i].problem_id].push_back(i);
  return groups;
}

}  // namespace

std::vector<ManifestEntry> stratified_split(std::vector<ManifestEntry> entries,
                                            const SplitRatios& ratios, std::uint64_t seed) {
  const double total = ratios.train + ratios.validation + ratios.test;
  if (std::abs(total - 1.0) > 1e-9 || ratios.train < 0 || ratios.validation < 0 || ratios.test < 0) {
    throw Error("InvalidConfig", "split ratios must be non-negative and sum to 1");
  }
  for (const auto& [problem, members] : group_by_problem(entries)) {
    const std::size_t n = members.size();
    if (n < 3) {
      throw Error("TooFewSamples", "problem '" + problem + "' has " + std::to_string(n) +
                                       " samples, need at least 3");
    }
    const std::size_t n_test = std::max<std::size_t>(1, round_half_even(ratios.test * n));
    const std::size_t n_val = std::max<std::size_t>(1, round_half_even(ratios.validation * n));
    if (n_test + n_val >= n) {
      throw Error("TooFewSamples", "problem '" + problem + "' leaves no training samples");
    }

    std::vector<std::size_t> order = members;
    SplitMix64 rng(seed ^ fnv1a(problem));
    shuffle(std::span<std::size_t>(order), rng);
    for (std::size_t k = 0; k < n; ++k) {
      entries[order[k]].split = k < n_test ? Split::test
                                : k < n_test + n_val ? Split::validation
                                                     : Split::train;
    }
  }
  return entries;
}

SimSet build_sim_set(std::span<const ManifestEntry> test_entries, std::size_t n_problems,
                     std::size_t per_problem_per_language,
                     std::span<const std::string> languages, std::uint64_t seed) {
  if (languages.empty() || n_problems == 0 || per_problem_per_language == 0) {
    throw Error("InvalidConfig", "sim set needs languages, problems and samples");
  }
  // problem -> language -> entry indices
  std::map<std::string, std::map<std::string, std::vector<std::size_t>>> pool;
  for (std::size_t i = 0; i < test_entries.size(); ++i) {
    if (test_entries[i].split != Split::test && test_entries[i].split != Split::unassigned) {
      throw Error("InvalidConfig", "sim set entries must come from the test split");
    }
    pool[test_entries[i].problem_id][test_entries[i].language].push_back(i);
  }

  std::vector<std::string> eligible;
  std::string deficiency;
  for (const auto& [problem, by_lang] : pool) {
    bool ok = true;
    for (const auto& lang : languages) {
      const auto it = by_lang.find(lang);
      const std::size_t have = it == by_lang.end() ? 0 : it->second.size();
      if (have < per_problem_per_language) {
        ok = false;
        if (deficiency.empty()) {
          deficiency = "problem '" + problem + "' has " + std::to_string(have) + " '" + lang +
                       "' samples, need " + std::to_string(per_problem_per_language);
        }
        break;
      }
    }
    if (ok) eligible.push_back(problem);
  }
  if (eligible.size() < n_problems) {
    std::string msg = "need " + std::to_string(n_problems) + " eligible problems, found " +
                      std::to_string(eligible.size());
    if (!deficiency.empty()) msg += "; " + deficiency;
    throw Error("InsufficientSamples", msg);
  }

  SplitMix64 rng(seed);
  shuffle(std::span<std::string>(eligible), rng);
  eligible.resize(n_problems);
  std::sort(eligible.begin(), eligible.end());

  SimSet sim;
  sim.per_problem_count = per_problem_per_language;
  for (const auto& problem : eligible) {
    sim.problems.insert(problem);
    for (const auto& lang : languages) {
      std::vector<std::size_t> members = pool[problem][lang];
      shuffle(std::span<std::size_t>(members), rng);
      members.resize(per_problem_per_language);
      std::sort(members.begin(), members.end());
      for (std::size_t i : members) sim.entries.push_back(test_entries[i]);
    }
  }
  return sim;
}

SimSet sim_set_from_entries(std::vector<ManifestEntry> entries) {
  SimSet sim;
  std::map<std::string, std::map<std::string, std::size_t>> counts;
  for (const auto& e : entries) {
    sim.problems.insert(e.problem_id);
    ++counts[e.problem_id][e.language];
  }
  if (!counts.empty()) sim.per_problem_count = counts.begin()->second.begin()->second;
  sim.entries = std::move(entries);
  return sim;
}

RelevanceTable one_vs_all_pairs(std::span<const std::string> labels) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
  RelevanceTable table;
  table.relevant.resize(labels.size());
  for (std::size_t q = 0; q < labels.size(); ++q) {
    for (std::size_t j : groups[labels[q]])
      if (j != q) table.relevant[q].push_back(j);
  }
  return table;
}

RelevanceTable one_vs_all_pairs(const SimSet& sim) {
  std::vector<std::string> labels;
  labels.reserve(sim.entries.size());
  for (const auto& e : sim.entries) labels.push_back(e.problem_id);
  return one_vs_all_pairs(labels);
}

}  // namespace cv4code::corpus
