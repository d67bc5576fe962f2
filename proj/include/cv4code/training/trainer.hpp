#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "cv4code/codec/code_image.hpp"
#include "cv4code/common/error.hpp"
#include "cv4code/models/model.hpp"
#include "cv4code/training/checkpoint.hpp"
#include "cv4code/training/config.hpp"

namespace cv4code::training {

/// Full-size code images and their class indices.
struct Dataset {
  std::vector<codec::CodeImage> images;
  std::vector<std::size_t> labels;
  std::size_t size() const { return images.size(); }
};

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0;  // sample-weighted mean over the epoch
  double train_top1 = 0;  // from the training forward passes
  double val_top1 = 0;
  double val_top5 = 0;
  double lr = 0;  // at the epoch's last step
};

/// "epoch=3 train_loss=... train_top1=... val_top1=... val_top5=... lr=..."
std::string format_metrics(const EpochMetrics& m);

struct TrainResult {
  Checkpoint best;  // highest validation top-1, earliest on ties
  Checkpoint last;
  std::vector<EpochMetrics> history;
};

/// Raised when the training loss stops being finite.
class Diverged : public Error {
 public:
  Diverged(const std::string& message, Checkpoint last_good)
      : Error("Diverged", message), last_good_(std::move(last_good)) {}
  const Checkpoint& last_good() const { return last_good_; }

 private:
  Checkpoint last_good_;
};

/// Optimizer steps per epoch: batches of batch_size, with a trailing batch
/// of one sample folded into the previous batch.
std::size_t steps_per_epoch(std::size_t samples, std::size_t batch_size);

struct TrainHooks {
  std::function<void(const EpochMetrics&)> on_epoch;
  /// A TrainResult::last to continue from; the continuation reproduces the
  /// uninterrupted run. `best` then covers the resumed epochs only.
  const Checkpoint* resume = nullptr;
  /// Stop once this many epochs are complete (0 = the configured total).
  std::size_t stop_after = 0;
};

/// Trains in place. Each epoch: seeded shuffle, batches, prepare_input,
/// forward, AAM loss, backward, AdamW at the scheduled rate; then
/// validation top-1/top-5 and model selection. Checkpoints carry `classes`.
/// Throws EmptySplit, LabelOutOfRange, Diverged.
TrainResult train_loop(models::Model<float>& model, const Dataset& train, const Dataset& validation,
                       const std::vector<std::string>& classes, const TrainConfig& cfg, const AamConfig& aam,
                       const TrainHooks& hooks = {});

}  // namespace cv4code::training
