#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "cv4code/models/config.hpp"
#include "cv4code/training/config.hpp"

namespace cv4code::cli {

/// A training run: a named model variant, model-key overrides on top of it,
/// and the training/AAM settings. Text form is flat `key = value` lines;
/// `model` names the variant, model keys (depth, hidden, dropout, ...) and
/// training keys (lr, epochs, margin, ...) may follow. Unknown keys throw
/// InvalidConfig. n_classes always comes from the data.
struct RunConfig {
  std::string model = "cct-tiny";
  std::vector<std::pair<std::string, std::string>> model_keys;
  training::TrainConfig train;
  training::AamConfig aam;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);
void apply_run_key(RunConfig& run, const std::string& key, const std::string& value);

/// The variant with overrides applied; validated.
models::ModelConfig resolve_model(const RunConfig& run, std::size_t n_classes);

/// "# cv4code seed=... config_hash=... image_format=... checkpoint_format=..."
/// followed by a newline. The hash is FNV-1a of `config_text`.
std::string repro_header(std::uint64_t seed, const std::string& config_text);

/// Exit status: 0 success, 1 domain error (the error name is printed), 2
/// usage error (the grammar is printed).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cv4code::cli
