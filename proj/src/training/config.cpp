#include "cv4code/training/config.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "cv4code/common/error.hpp"

namespace cv4code::training {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error("InvalidConfig", what); }

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) invalid(key + ": bad value " + value);
  return out;
}

}  // namespace

void validate(const AamConfig& c) {
  if (!(c.margin >= 0 && c.margin < std::numbers::pi / 2)) invalid("margin must be in [0, pi/2)");
  if (!(c.scale > 0) || !std::isfinite(c.scale)) invalid("scale must be positive");
}

void validate(const TrainConfig& c) {
  if (!(c.lr > 0) || !std::isfinite(c.lr)) invalid("lr must be positive");
  if (!(c.weight_decay >= 0)) invalid("weight_decay must be non-negative");
  if (c.total_epochs == 0) invalid("epochs must be positive");
  if (c.warmup_epochs >= c.total_epochs) invalid("warmup_epochs must be below epochs");
  if (c.batch_size == 0) invalid("batch_size must be positive");
}

bool apply_training_key(TrainConfig& train, AamConfig& aam, const std::string& key, const std::string& value) {
  if (key == "margin") aam.margin = parse_number<double>(key, value);
  else if (key == "scale") aam.scale = parse_number<double>(key, value);
  else if (key == "lr") train.lr = parse_number<double>(key, value);
  else if (key == "weight_decay") train.weight_decay = parse_number<double>(key, value);
  else if (key == "warmup_epochs") train.warmup_epochs = parse_number<std::size_t>(key, value);
  else if (key == "epochs") train.total_epochs = parse_number<std::size_t>(key, value);
  else if (key == "batch_size") train.batch_size = parse_number<std::size_t>(key, value);
  else if (key == "seed") train.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "threads") train.threads = parse_number<std::size_t>(key, value);
  else return false;
  return true;
}

std::string format_training_config(const TrainConfig& train, const AamConfig& aam) {
  std::ostringstream out;
  out.precision(17);
  out << "lr = " << train.lr << "\nweight_decay = " << train.weight_decay << "\nwarmup_epochs = " << train.warmup_epochs
      << "\nepochs = " << train.total_epochs << "\nbatch_size = " << train.batch_size << "\nseed = " << train.seed
      << "\nmargin = " << aam.margin << "\nscale = " << aam.scale << "\n";
  return out.str();
}

}  // namespace cv4code::training
