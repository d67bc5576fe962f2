#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace cv4code::training {

struct AamConfig {
  double margin = 0.2;  // radians
  double scale = 30.0;
  std::size_t n_classes = 0;  // 0 = take it from the model
};

struct TrainConfig {
  double lr = 1e-3;
  double weight_decay = 1e-4;
  std::size_t warmup_epochs = 5;
  std::size_t total_epochs = 100;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;
  /// Evaluation workers (0 = all cores). Never changes a result.
  std::size_t threads = 0;
};

/// Throw InvalidConfig.
void validate(const AamConfig& c);
void validate(const TrainConfig& c);

/// True and applied when `key` names an AamConfig or TrainConfig field
/// (margin, scale, lr, weight_decay, warmup_epochs, epochs, batch_size,
/// seed, threads). Throws InvalidConfig on a malformed value.
bool apply_training_key(TrainConfig& train, AamConfig& aam, const std::string& key, const std::string& value);

/// "key = value" lines accepted by apply_training_key (threads excluded).
std::string format_training_config(const TrainConfig& train, const AamConfig& aam);

}  // namespace cv4code::training
