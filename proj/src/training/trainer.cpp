#include "cv4code/training/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "cv4code/common/error.hpp"
#include "cv4code/common/parallel.hpp"
#include "cv4code/evalret/evaluate.hpp"
#include "cv4code/evalret/metrics.hpp"
#include "cv4code/tensor/ops.hpp"

namespace cv4code::training {

namespace {

// Kept apart from the initialization stream.
constexpr std::uint64_t kShuffleSalt = 0x5f3759df2545f491ULL;

void check_dataset(const Dataset& d, std::size_t classes, const char* name) {
  if (d.images.empty()) throw Error("EmptySplit", std::string(name) + " split is empty");
  if (d.images.size() != d.labels.size()) throw Error("ShapeMismatch", std::string(name) + ": one label per image");
  for (std::size_t y : d.labels)
    if (y >= classes) throw Error("LabelOutOfRange", std::string(name) + ": label " + std::to_string(y));
}

}  // namespace

std::string format_metrics(const EpochMetrics& m) {
  char buf[192];
  std::snprintf(buf, sizeof buf, "epoch=%zu train_loss=%.6f train_top1=%.4f val_top1=%.4f val_top5=%.4f lr=%.6e",
                m.epoch, m.train_loss, m.train_top1, m.val_top1, m.val_top5, m.lr);
  return buf;
}

std::size_t steps_per_epoch(std::size_t samples, std::size_t batch_size) {
  const std::size_t full = samples / batch_size, rest = samples % batch_size;
  return full + (rest > 1 || full == 0 ? 1 : 0);
}

TrainResult train_loop(models::Model<float>& model, const Dataset& train, const Dataset& validation,
                       const std::vector<std::string>& classes, const TrainConfig& cfg, const AamConfig& aam,
                       const TrainHooks& hooks) {
  validate(cfg);
  validate(aam);
  const std::size_t n_classes = model.config().n_classes;
  if (aam.n_classes != 0 && aam.n_classes != n_classes) throw Error("InvalidConfig", "aam n_classes != model");
  check_dataset(train, n_classes, "train");
  check_dataset(validation, n_classes, "validation");

  const std::size_t n = train.size();
  const std::size_t steps = steps_per_epoch(n, cfg.batch_size);
  const LrSchedule schedule = make_schedule(cfg, steps);
  const std::size_t workers = worker_count(cfg.threads);
  const std::size_t top5 = std::min<std::size_t>(5, n_classes);

  SplitMix64 shuffle_rng(cfg.seed ^ kShuffleSalt);
  AdamState<float> optimizer;
  std::size_t first_epoch = 0;
  double best_top1 = -1;

  const auto snapshot = [&](std::size_t epoch, double val_top1) {
    Checkpoint c = capture(model, &optimizer);
    c.training_config = format_training_config(cfg, aam);
    c.classes = classes;
    c.epoch = epoch;
    c.val_top1 = val_top1;
    c.best_val_top1 = std::max(best_top1, val_top1);
    c.shuffle_rng = shuffle_rng.state();
    c.dropout_rng = model.dropout_rng().state();
    return c;
  };

  TrainResult result;
  if (const Checkpoint* resume = hooks.resume) {
    restore(*resume, model, &optimizer);
    shuffle_rng.set_state(resume->shuffle_rng);
    model.dropout_rng().set_state(resume->dropout_rng);
    first_epoch = resume->epoch;
    best_top1 = resume->best_val_top1;
    result.last = *resume;
  } else {
    result.last = snapshot(0, 0);
  }

  std::vector<std::size_t> order(n);
  std::vector<codec::CodeImage> batch_images;
  std::vector<std::size_t> batch_labels;
  auto params = model.parameter_vars();

  const std::size_t stop = hooks.stop_after ? std::min(hooks.stop_after, cfg.total_epochs) : cfg.total_epochs;
  for (std::size_t epoch = first_epoch; epoch < stop; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    shuffle(std::span<std::size_t>(order), shuffle_rng);
    double loss_sum = 0;
    std::size_t correct = 0;
    double lr = 0;
    for (std::size_t s = 0; s < steps; ++s) {
      const std::size_t begin = s * cfg.batch_size;
      const std::size_t end = s + 1 == steps ? n : begin + cfg.batch_size;
      batch_images.clear();
      batch_labels.clear();
      for (std::size_t i = begin; i < end; ++i) {
        batch_images.push_back(train.images[order[i]]);
        batch_labels.push_back(train.labels[order[i]]);
      }
      const auto input = models::prepare_input(model.config(), batch_images, models::Phase::train);
      model.zero_grad();
      const Var<float> cos = model.forward(input, models::Phase::train);
      const Var<float> loss = aam_loss_from_cosines(cos, batch_labels, aam);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw Diverged("loss is " + std::to_string(value) + " at epoch " + std::to_string(epoch + 1), result.last);
      }
      tensor::backward(loss);
      lr = lr_at(optimizer.step, schedule);
      adamw_step(std::span<Var<float>>(params), optimizer, lr, cfg.weight_decay);
      loss_sum += value * static_cast<double>(end - begin);
      correct += static_cast<std::size_t>(
          std::lround(evalret::topk_accuracy(cos.value(), batch_labels, 1) * static_cast<double>(end - begin)));
    }

    const auto eval = evalret::evaluate(model, validation.images, workers);
    EpochMetrics m;
    m.epoch = epoch + 1;
    m.train_loss = loss_sum / static_cast<double>(n);
    m.train_top1 = static_cast<double>(correct) / static_cast<double>(n);
    m.val_top1 = evalret::topk_accuracy(eval.cosines, validation.labels, 1);
    m.val_top5 = evalret::topk_accuracy(eval.cosines, validation.labels, top5);
    m.lr = lr;
    result.history.push_back(m);
    if (hooks.on_epoch) hooks.on_epoch(m);

    result.last = snapshot(epoch + 1, m.val_top1);
    if (m.val_top1 > best_top1) {
      best_top1 = m.val_top1;
      result.best = result.last;
    }
  }
  if (result.best.model_config.empty()) result.best = result.last;
  return result;
}

}  // namespace cv4code::training
