#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cv4code::corpus {

enum class Split { train, validation, test, unassigned };

std::string to_string(Split split);
Split split_from_string(const std::string& name);

struct ManifestEntry {
  std::string path;
  std::string problem_id;
  std::string language;
  Split split = Split::unassigned;
  std::uint64_t byte_len = 0;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

using LanguageMap = std::map<std::string, std::string>;  // extension (".py") -> language

/// cpp / python / java extensions.
LanguageMap default_language_map();

/// Walks <root>/<problem_id>/<files...>. Unreadable files are reported on
/// stderr and skipped; byte-identical files within one problem are kept once.
/// Entries come back sorted by (problem_id, path). Throws EmptyCorpus.
std::vector<ManifestEntry> scan_corpus(const std::filesystem::path& root,
                                       const LanguageMap& language_map = default_language_map());

// Manifest file: one JSON object per line with keys path, problem_id,
// language, split, byte_len. Lines starting with '#' are comments; `header`
// is written verbatim first and should consist of such lines.
void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries,
                    const std::string& header = "");
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

std::vector<ManifestEntry> filter_split(std::span<const ManifestEntry> entries, Split split);

/// Sorted distinct problem ids; position = class index.
std::vector<std::string> problem_ids(std::span<const ManifestEntry> entries);

std::string read_file(const std::filesystem::path& path);

}  // namespace cv4code::corpus
