#include "cv4code/corpus/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "cv4code/common/error.hpp"

namespace cv4code::corpus {

namespace fs = std::filesystem;

std::string to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
    case Split::unassigned: return "unassigned";
  }
  return "unassigned";
}

Split split_from_string(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "validation") return Split::validation;
  if (name == "test") return Split::test;
  if (name == "unassigned") return Split::unassigned;
  throw Error("FormatError", "unknown split '" + name + "'");
}

LanguageMap default_language_map() {
  return {{".cpp", "cpp"}, {".cc", "cpp"},   {".cxx", "cpp"},  {".hpp", "cpp"},
          {".h", "cpp"},   {".py", "python"}, {".java", "java"}};
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("IoError", "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error("IoError", "read failure on " + path.string());
  return buf.str();
}

std::vector<ManifestEntry> scan_corpus(const fs::path& root, const LanguageMap& language_map) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw Error("IoError", root.string() + " is not a directory");

  std::vector<fs::path> problem_dirs;
  for (const auto& d : fs::directory_iterator(root)) {
    if (d.is_directory()) problem_dirs.push_back(d.path());
  }
  std::sort(problem_dirs.begin(), problem_dirs.end());

  std::vector<ManifestEntry> entries;
  for (const auto& dir : problem_dirs) {
    const std::string problem = dir.filename().string();
    std::vector<fs::path> files;
    for (const auto& f : fs::recursive_directory_iterator(dir)) {
      if (f.is_regular_file()) files.push_back(f.path());
    }
    std::sort(files.begin(), files.end());

    std::unordered_multimap<std::size_t, std::string> seen;
    for (const auto& file : files) {
      std::string content;
      try {
        content = read_file(file);
      } catch (const Error& e) {
        std::cerr << "warning: skipping " << file.string() << " (" << e.what() << ")\n";
        continue;
      }
      const std::size_t h = std::hash<std::string>{}(content);
      const auto [lo, hi] = seen.equal_range(h);
      if (std::any_of(lo, hi, [&](const auto& kv) { return kv.second == content; })) continue;
      seen.emplace(h, content);

      const auto lang = language_map.find(file.extension().string());
      entries.push_back({file.string(), problem,
                         lang == language_map.end() ? "unknown" : lang->second, Split::unassigned,
                         content.size()});
    }
  }
  if (entries.empty()) throw Error("EmptyCorpus", "no readable files under " + root.string());
  return entries;
}

void write_manifest(const fs::path& path, std::span<const ManifestEntry> entries, const std::string& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("IoError", "cannot write " + path.string());
  out << header;
  for (const auto& e : entries) {
    nlohmann::ordered_json j;
    j["path"] = e.path;
    j["problem_id"] = e.problem_id;
    j["language"] = e.language;
    j["split"] = to_string(e.split);
    j["byte_len"] = e.byte_len;
    out << j.dump() << '\n';
  }
  if (!out) throw Error("IoError", "failed writing " + path.string());
}

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("IoError", "cannot read " + path.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ManifestEntry e;
      e.path = j.at("path").get<std::string>();
      e.problem_id = j.at("problem_id").get<std::string>();
      e.language = j.value("language", std::string("unknown"));
      e.split = split_from_string(j.value("split", std::string("unassigned")));
      e.byte_len = j.value("byte_len", std::uint64_t{0});
      if (e.problem_id.empty()) throw Error("FormatError", "empty problem_id");
      entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw Error("FormatError", path.string() + ":" + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return entries;
}

std::vector<ManifestEntry> filter_split(std::span<const ManifestEntry> entries, Split split) {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries)
    if (e.split == split) out.push_back(e);
  return out;
}

std::vector<std::string> problem_ids(std::span<const ManifestEntry> entries) {
  std::set<std::string> ids;
  for (const auto& e : entries) ids.insert(e.problem_id);
  return {ids.begin(), ids.end()};
}

}  // namespace cv4code::corpus
