#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "cv4code/common/error.hpp"
#include "cv4code/corpus/manifest.hpp"
#include "cv4code/corpus/split.hpp"

using namespace cv4code;
using namespace cv4code::corpus;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("cv4code_corpus_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << content;
}

std::vector<ManifestEntry> synthetic(std::map<std::string, std::size_t> counts,
                                     std::vector<std::string> langs = {"cpp"}) {
  std::vector<ManifestEntry> out;
  for (const auto& [problem, n] : counts)
    for (const auto& lang : langs)
      for (std::size_t i = 0; i < n; ++i)
        out.push_back({problem + "/" + lang + std::to_string(i), problem, lang, Split::unassigned, 10});
  return out;
}

std::string kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return "no-throw";
}

std::map<Split, std::size_t> tally(const std::vector<ManifestEntry>& entries, const std::string& problem) {
  std::map<Split, std::size_t> t;
  for (const auto& e : entries)
    if (e.problem_id == problem) ++t[e.split];
  return t;
}

}  // namespace

TEST(ScanCorpus, OneEntryPerFile) {
  TempDir dir;
  for (std::string p : {"p1", "p2"})
    for (int i = 0; i < 3; ++i) write(dir.path() / p / ("s" + std::to_string(i) + ".py"), p + "x" + std::to_string(i));
  const auto entries = scan_corpus(dir.path());
  ASSERT_EQ(entries.size(), 6u);
  EXPECT_EQ(entries[0].problem_id, "p1");
  EXPECT_EQ(entries[0].language, "python");
  EXPECT_EQ(entries[0].split, Split::unassigned);
  EXPECT_EQ(entries[0].byte_len, 4u);
}

TEST(ScanCorpus, UnknownExtensionKept) {
  TempDir dir;
  write(dir.path() / "p" / "a.rs", "fn main(){}");
  const auto entries = scan_corpus(dir.path());
  ASSERT_EQ(entries.size(), 1u);
  EXPECT_EQ(entries[0].language, "unknown");
}

TEST(ScanCorpus, EmptyDirectory) {
  TempDir dir;
  EXPECT_EQ(kind_of([&] { scan_corpus(dir.path()); }), "EmptyCorpus");
}

TEST(ScanCorpus, DropsByteDuplicatesWithinProblem) {
  TempDir dir;
  write(dir.path() / "p" / "a.py", "same");
  write(dir.path() / "p" / "b.py", "same");
  write(dir.path() / "q" / "c.py", "same");
  const auto entries = scan_corpus(dir.path());
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[0].problem_id, "p");
  EXPECT_EQ(entries[1].problem_id, "q");
}

TEST(Manifest, RoundTrip) {
  TempDir dir;
  auto entries = synthetic({{"a", 3}, {"b", 4}});
  entries[1].split = Split::test;
  entries[2].path = "with \"quote\"\tand tab";
  write_manifest(dir.path() / "m.jsonl", entries);
  EXPECT_EQ(read_manifest(dir.path() / "m.jsonl"), entries);
}

TEST(StratifiedSplit, ExactRatiosForTen) {
  const auto out = stratified_split(synthetic({{"p", 10}}), {}, 1);
  const auto t = tally(out, "p");
  EXPECT_EQ(t.at(Split::train), 8u);
  EXPECT_EQ(t.at(Split::validation), 1u);
  EXPECT_EQ(t.at(Split::test), 1u);
}

TEST(StratifiedSplit, HalfEvenRoundingForTwentyFive) {
  const auto out = stratified_split(synthetic({{"p", 25}}), {}, 1);
  const auto t = tally(out, "p");
  EXPECT_EQ(t.at(Split::test), 2u);
  EXPECT_EQ(t.at(Split::validation), 2u);
  EXPECT_EQ(t.at(Split::train), 21u);
}

TEST(StratifiedSplit, SmallProblemsStillCoverEverySplit) {
  const auto out = stratified_split(synthetic({{"p", 3}}), {}, 1);
  const auto t = tally(out, "p");
  EXPECT_EQ(t.at(Split::test), 1u);
  EXPECT_EQ(t.at(Split::validation), 1u);
  EXPECT_EQ(t.at(Split::train), 1u);
  EXPECT_EQ(kind_of([] { stratified_split(synthetic({{"p", 2}}), {}, 1); }), "TooFewSamples");
}

TEST(StratifiedSplit, DeterministicAndSeedSensitive) {
  const auto input = synthetic({{"a", 30}, {"b", 17}, {"c", 9}});
  EXPECT_EQ(stratified_split(input, {}, 42), stratified_split(input, {}, 42));
  EXPECT_NE(stratified_split(input, {}, 42), stratified_split(input, {}, 43));
}

TEST(StratifiedSplit, PropertiesOnRandomSizes) {
  for (std::size_t n = 5; n < 120; ++n) {  // below 5 the minimum-1 rule dominates
    const auto out = stratified_split(synthetic({{"p", n}}), {}, n);
    ASSERT_EQ(out.size(), n);
    const auto t = tally(out, "p");
    for (auto [split, ratio] : {std::pair{Split::train, 0.8}, {Split::validation, 0.1}, {Split::test, 0.1}}) {
      const double got = t.count(split) ? static_cast<double>(t.at(split)) : 0.0;
      EXPECT_LE(std::abs(got - ratio * static_cast<double>(n)), 1.0 + 1e-9) << "n=" << n;
    }
  }
}

TEST(StratifiedSplit, RejectsBadRatios) {
  EXPECT_EQ(kind_of([] { stratified_split(synthetic({{"p", 10}}), {0.5, 0.1, 0.1}, 1); }),
            "InvalidConfig");
}

TEST(SimSet, ReferenceConfiguration) {
  std::map<std::string, std::size_t> counts;
  for (int p = 0; p < 120; ++p) counts["p" + std::to_string(1000 + p)] = 12;
  auto entries = synthetic(counts, {"cpp", "python", "java"});
  for (auto& e : entries) e.split = Split::test;
  const std::vector<std::string> langs{"cpp", "python"};
  const auto sim = build_sim_set(entries, 100, 10, langs, 7);
  EXPECT_EQ(sim.entries.size(), 2000u);
  EXPECT_EQ(sim.problems.size(), 100u);
  std::map<std::string, std::size_t> per;
  for (const auto& e : sim.entries) {
    ++per[e.problem_id];
    EXPECT_NE(e.language, "java");
  }
  for (const auto& [p, c] : per) EXPECT_EQ(c, 20u);

  const auto rel = one_vs_all_pairs(sim);
  for (std::size_t q = 0; q < rel.queries(); ++q) EXPECT_EQ(rel.r(q), 19u);
}

TEST(SimSet, SingleEntryAndShortfall) {
  auto entries = synthetic({{"a", 3}});
  for (auto& e : entries) e.split = Split::test;
  const std::vector<std::string> langs{"cpp"};
  EXPECT_EQ(build_sim_set(entries, 1, 1, langs, 0).entries.size(), 1u);
  EXPECT_EQ(kind_of([&] { build_sim_set(entries, 2, 1, langs, 0); }), "InsufficientSamples");
  const std::vector<std::string> py{"python"};
  try {
    build_sim_set(entries, 1, 1, py, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), "InsufficientSamples");
    EXPECT_NE(std::string(e.what()).find("'a'"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("python"), std::string::npos);
  }
}

TEST(SimSet, OnlyDrawsFromTestSplit) {
  auto entries = stratified_split(synthetic({{"a", 40}, {"b", 40}}), {}, 3);
  const auto test = filter_split(entries, Split::test);
  const std::vector<std::string> langs{"cpp"};
  const auto sim = build_sim_set(test, 2, 4, langs, 1);
  for (const auto& e : sim.entries) EXPECT_EQ(e.split, Split::test);
  EXPECT_EQ(kind_of([&] { build_sim_set(entries, 2, 4, langs, 1); }), "InvalidConfig");
}

TEST(Relevance, SmallCases) {
  const std::vector<std::string> same{"x", "x"};
  const auto r1 = one_vs_all_pairs(same);
  EXPECT_EQ(r1.relevant[0], std::vector<std::size_t>{1});
  EXPECT_EQ(r1.relevant[1], std::vector<std::size_t>{0});
  const std::vector<std::string> diff{"x", "y"};
  const auto r2 = one_vs_all_pairs(diff);
  EXPECT_EQ(r2.r(0), 0u);
  EXPECT_EQ(r2.r(1), 0u);
}

TEST(Relevance, SymmetricAndSelfFree) {
  std::vector<std::string> labels;
  for (int i = 0; i < 60; ++i) labels.push_back(std::string(1, static_cast<char>('a' + (i * 7) % 5)));
  const auto rel = one_vs_all_pairs(labels);
  for (std::size_t q = 0; q < labels.size(); ++q) {
    for (std::size_t j : rel.relevant[q]) {
      EXPECT_NE(j, q);
      const auto& back = rel.relevant[j];
      EXPECT_NE(std::find(back.begin(), back.end(), q), back.end());
    }
  }
}
