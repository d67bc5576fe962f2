#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "cv4code/models/model.hpp"
#include "cv4code/training/objective.hpp"

namespace cv4code::training {

// Binary layout, little-endian: "CV4K", u16 version, model config text,
// training config text, class names, epoch, validation scores, RNG states,
// optimizer step, then named tensor blocks (name, dtype tag, rank, dims,
// raw values). Optimizer moments are stored as "adam.m/<param>" and
// "adam.v/<param>".
inline constexpr std::uint16_t kCheckpointFormatVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor<float> value;
  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

struct Checkpoint {
  std::string model_config;
  std::string training_config;
  std::vector<std::string> classes;
  std::uint64_t epoch = 0;  // completed epochs
  double val_top1 = 0;      // of this state
  double best_val_top1 = 0;  // over the run so far
  std::uint64_t shuffle_rng = 0;
  std::uint64_t dropout_rng = 0;
  std::uint64_t optimizer_step = 0;
  std::vector<NamedTensor> tensors;  // parameters, buffers, optimizer moments
  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

/// Parameters, buffers and (when given) optimizer moments of a model.
Checkpoint capture(const models::Model<float>& model, const AdamState<float>* optimizer);

/// Copies parameter and buffer values into `model` and, when given, the
/// optimizer moments and step. Throws FormatError on a missing or misshapen
/// tensor.
void restore(const Checkpoint& ckpt, models::Model<float>& model, AdamState<float>* optimizer);

/// Builds the model described by the checkpoint and restores its values.
std::unique_ptr<models::Model<float>> model_from_checkpoint(const Checkpoint& ckpt);

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
/// Throws FormatError.
Checkpoint read_checkpoint(std::istream& in);
/// Throw IoError, FormatError.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cv4code::training
