#include "cv4code/cli/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "cv4code/codec/code_image.hpp"
#include "cv4code/common/error.hpp"
#include "cv4code/common/hash.hpp"
#include "cv4code/common/parallel.hpp"
#include "cv4code/corpus/manifest.hpp"
#include "cv4code/corpus/split.hpp"
#include "cv4code/evalret/evaluate.hpp"
#include "cv4code/evalret/metrics.hpp"
#include "cv4code/evalret/retrieval.hpp"
#include "cv4code/training/checkpoint.hpp"
#include "cv4code/training/trainer.hpp"

namespace cv4code::cli {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kModelKeys = {
    "image_size", "depth",  "hidden", "mlp",    "heads",            "dropout",         "patch",      "char_embed",
    "tokenizer",  "position", "stem", "stages", "blocks_per_stage", "shortcut_kernel", "bottleneck", "layers"};

[[noreturn]] void invalid(const std::string& what) { throw Error("InvalidConfig", what); }

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// Flat "key = value" lines with '#' comments, in file order.
std::vector<std::pair<std::string, std::string>> key_values(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::istringstream in(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) invalid("line " + std::to_string(line_no) + ": expected key = value");
    kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return kv;
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("IoError", "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("IoError", "cannot write " + path.string());
  out << text;
  if (!out) throw Error("IoError", "failed writing " + path.string());
}

std::uint64_t seed_of(const std::string& training_config) {
  training::TrainConfig t;
  training::AamConfig a;
  for (const auto& [k, v] : key_values(training_config)) training::apply_training_key(t, a, k, v);
  return t.seed;
}

std::string checkpoint_header(const training::Checkpoint& ckpt) {
  return repro_header(seed_of(ckpt.training_config), ckpt.model_config + ckpt.training_config);
}

std::vector<std::size_t> labels_for(std::span<const corpus::ManifestEntry> entries,
                                    const std::vector<std::string>& classes) {
  std::vector<std::size_t> labels;
  for (const auto& e : entries) {
    const auto it = std::find(classes.begin(), classes.end(), e.problem_id);
    if (it == classes.end()) throw Error("UnknownClass", "problem " + e.problem_id + " is not a model class");
    labels.push_back(static_cast<std::size_t>(it - classes.begin()));
  }
  return labels;
}

std::vector<corpus::ManifestEntry> select_split(const std::vector<corpus::ManifestEntry>& entries,
                                                const std::string& split) {
  if (split == "all") return entries;
  auto out = corpus::filter_split(entries, corpus::split_from_string(split));
  if (out.empty()) throw Error("EmptySplit", "no " + split + " entries");
  return out;
}

std::string render_image(const codec::CodeImage& image) {
  std::ostringstream out;
  out << "height=" << image.height() << " width=" << image.width() << "\n";
  for (std::size_t r = 0; r < image.height(); ++r) {
    for (std::size_t c = 0; c < image.width(); ++c) {
      char cell[4];
      std::snprintf(cell, sizeof cell, "%2u", static_cast<unsigned>(image.at(r, c)));
      out << (c ? " " : "") << cell;
    }
    out << "\n";
  }
  out << "\n";
  for (std::size_t r = 0; r < image.height(); ++r) {
    for (std::size_t c = 0; c < image.width(); ++c) {
      const auto ch = codec::alphabet().char_at(image.at(r, c));
      if (ch) {
        out << *ch;
      } else {
        out << "\xc2\xb7";  // middle dot marks [blank]
      }
    }
    out << "\n";
  }
  return out.str();
}

bool is_image_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  return in && std::string(magic, 4) == "CV4C";
}

// --- subcommands -------------------------------------------------------------

struct Args {
  std::string root, manifest, output, config, data, ckpt, sim, split, embeddings, query, resume, languages;
  std::string ratios = "0.8,0.1,0.1";
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  std::size_t problems = 100, per_language = 10, top = 10;
  unsigned tab_width = codec::kDefaultTabWidth;
  bool deterministic = false;
};

void corpus_scan(const Args& a, std::ostream& out) {
  const auto entries = corpus::scan_corpus(a.root);
  corpus::write_manifest(a.output, entries, repro_header(0, "corpus scan\n"));
  out << "entries=" << entries.size() << " problems=" << corpus::problem_ids(entries).size() << "\n";
}

void corpus_split(const Args& a, std::ostream& out) {
  std::vector<double> r;
  for (std::stringstream ss(a.ratios); ss.good();) {
    std::string item;
    std::getline(ss, item, ',');
    try {
      r.push_back(std::stod(item));
    } catch (const std::exception&) {
      invalid("bad ratio " + item);
    }
  }
  if (r.size() != 3) invalid("--ratios needs train,validation,test");
  const corpus::SplitRatios ratios{r[0], r[1], r[2]};
  const auto entries = corpus::stratified_split(corpus::read_manifest(a.manifest), ratios, a.seed);
  corpus::write_manifest(a.output, entries, repro_header(a.seed, "corpus split ratios=" + a.ratios + "\n"));
  std::size_t counts[4] = {};
  for (const auto& e : entries) ++counts[static_cast<int>(e.split)];
  out << "train=" << counts[0] << " validation=" << counts[1] << " test=" << counts[2] << "\n";
}

void corpus_simset(const Args& a, std::ostream& out) {
  std::vector<std::string> languages;
  for (std::stringstream ss(a.languages); ss.good();) {
    std::string item;
    std::getline(ss, item, ',');
    if (!item.empty()) languages.push_back(item);
  }
  if (languages.empty()) invalid("--languages is empty");
  const auto pool = select_split(corpus::read_manifest(a.manifest), "test");
  const auto sim = corpus::build_sim_set(pool, a.problems, a.per_language, languages, a.seed);
  std::string config = "corpus simset problems=" + std::to_string(a.problems) +
                       " per_language=" + std::to_string(a.per_language) + " languages=" + a.languages + "\n";
  corpus::write_manifest(a.output, sim.entries, repro_header(a.seed, config));
  out << "entries=" << sim.entries.size() << " problems=" << sim.problems.size() << "\n";
}

void encode(const Args& a, std::ostream& out) {
  const auto image = codec::encode_source(corpus::read_file(a.root), a.tab_width);
  codec::save_image(a.output, image);
  out << "height=" << image.height() << " width=" << image.width() << "\n";
}

void inspect(const Args& a, std::ostream& out) {
  const auto image = is_image_file(a.root) ? codec::load_image(a.root)
                                           : codec::encode_source(corpus::read_file(a.root), a.tab_width);
  out << render_image(image);
}

void train(const Args& a, std::ostream& out) {
  RunConfig run = load_run_config(a.config);
  for (const auto& s : a.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) invalid("--set expects key=value, got " + s);
    apply_run_key(run, trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
  const auto entries = corpus::read_manifest(a.data);
  const auto classes = corpus::problem_ids(entries);
  const auto model_config = resolve_model(run, classes.size());
  training::validate(run.train);
  training::validate(run.aam);

  const std::size_t workers = worker_count(run.train.threads);
  std::vector<corpus::ManifestEntry> used;
  for (const auto& e : entries)
    if (e.split == corpus::Split::train || e.split == corpus::Split::validation) used.push_back(e);
  const auto images = evalret::load_images(used, workers);
  const auto labels = labels_for(used, classes);
  training::Dataset train_set, val_set;
  for (std::size_t i = 0; i < used.size(); ++i) {
    auto& d = used[i].split == corpus::Split::train ? train_set : val_set;
    d.images.push_back(images[i]);
    d.labels.push_back(labels[i]);
  }

  const std::string config_text = models::format_model_config(model_config) +
                                  training::format_training_config(run.train, run.aam);
  const std::string header = repro_header(run.train.seed, config_text);
  fs::create_directories(a.output);
  const fs::path dir(a.output);
  write_text(dir / "run.cfg", header + config_text);

  auto model = models::build_model<float>(model_config, run.train.seed);
  training::Checkpoint resumed;
  training::TrainHooks hooks;
  if (!a.resume.empty()) {
    resumed = training::load_checkpoint(a.resume);
    if (resumed.model_config != models::format_model_config(model_config) ||
        resumed.training_config != training::format_training_config(run.train, run.aam) || resumed.classes != classes) {
      invalid("checkpoint " + a.resume + " was written by a different run configuration");
    }
    hooks.resume = &resumed;
  }
  std::string report = header;
  hooks.on_epoch = [&](const training::EpochMetrics& m) {
    const std::string line = training::format_metrics(m) + "\n";
    report += line;
    out << line << std::flush;
  };

  training::TrainResult result;
  try {
    result = training::train_loop(*model, train_set, val_set, classes, run.train, run.aam, hooks);
  } catch (const training::Diverged& d) {
    training::save_checkpoint(dir / "last_good.ckpt", d.last_good());
    write_text(dir / "metrics.txt", report + "diverged after_epoch=" + std::to_string(d.last_good().epoch) + "\n");
    throw;
  }
  training::save_checkpoint(dir / "best.ckpt", result.best);
  training::save_checkpoint(dir / "last.ckpt", result.last);
  report += "best_epoch=" + std::to_string(result.best.epoch) + " best_val_top1=" +
            fmt("%.4f", result.best.val_top1) + "\n";
  write_text(dir / "metrics.txt", report);
  out << "best_epoch=" << result.best.epoch << " best_val_top1=" << fmt("%.4f", result.best.val_top1) << "\n";
}

void evaluate(const Args& a, std::ostream& out) {
  const auto ckpt = training::load_checkpoint(a.ckpt);
  auto model = training::model_from_checkpoint(ckpt);
  const std::size_t workers = worker_count();
  std::string report = checkpoint_header(ckpt);
  report += "checkpoint_epoch=" + std::to_string(ckpt.epoch) + "\n";

  const auto entries = corpus::read_manifest(a.data);
  if (a.sim.empty() || !a.split.empty()) {
    const std::string split = a.split.empty() ? "test" : a.split;
    const auto chosen = select_split(entries, split);
    const auto labels = labels_for(chosen, ckpt.classes);
    const auto result = evalret::evaluate(*model, evalret::load_images(chosen, workers), workers);
    const std::size_t k = std::min<std::size_t>(5, ckpt.classes.size());
    report += "split=" + split + " samples=" + std::to_string(chosen.size()) +
              " top1=" + fmt("%.6f", evalret::topk_accuracy(result.cosines, labels, 1)) +
              " top5=" + fmt("%.6f", evalret::topk_accuracy(result.cosines, labels, k)) + "\n";
  }
  if (!a.sim.empty()) {
    const auto sim = corpus::sim_set_from_entries(corpus::read_manifest(a.sim));
    const auto images = evalret::load_images(sim.entries, workers);
    const auto index = evalret::build_index(evalret::export_embeddings(*model, sim.entries, images, workers));
    const double map = evalret::map_at_r(index, corpus::one_vs_all_pairs(sim), workers);
    report += "sim_entries=" + std::to_string(sim.entries.size()) + " problems=" + std::to_string(sim.problems.size()) +
              " map_at_r=" + fmt("%.6f", map) + "\n";
  }
  if (!a.output.empty()) write_text(a.output, report);
  out << report;
}

void embed(const Args& a, std::ostream& out) {
  const auto ckpt = training::load_checkpoint(a.ckpt);
  auto model = training::model_from_checkpoint(ckpt);
  const std::size_t workers = worker_count();
  const auto chosen = select_split(corpus::read_manifest(a.data), a.split.empty() ? "all" : a.split);
  const auto records = evalret::export_embeddings(*model, chosen, evalret::load_images(chosen, workers), workers);
  std::ofstream file(a.output, std::ios::binary);
  if (!file) throw Error("IoError", "cannot write " + a.output);
  file << checkpoint_header(ckpt);
  evalret::write_embeddings(file, records);
  if (!file) throw Error("IoError", "failed writing " + a.output);
  out << "records=" << records.size() << " dim=" << (records.empty() ? 0 : records.front().vector.size()) << "\n";
}

void retrieve(const Args& a, std::ostream& out) {
  std::ifstream file(a.embeddings, std::ios::binary);
  if (!file) throw Error("IoError", "cannot read " + a.embeddings);
  const auto records = evalret::read_embeddings(file);
  const auto index = evalret::build_index(records);
  const auto result = evalret::retrieve(index, a.query);
  std::map<std::string, std::string> problem;
  for (const auto& r : records) problem[r.id] = r.problem_id;
  const std::size_t n = std::min(a.top, result.ranked.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& [id, score] = result.ranked[i];
    out << i + 1 << "\t" << fmt("%.6f", score) << "\t" << problem[id] << "\t" << id << "\n";
  }
}

}  // namespace

// --- run config --------------------------------------------------------------

void apply_run_key(RunConfig& run, const std::string& key, const std::string& value) {
  if (key == "model") {
    models::canonical_config(value);  // rejects unknown names
    run.model = value;
  } else if (key == "n_classes" || key == "kind") {
    invalid(key + " is fixed by the model variant and the data");
  } else if (std::find(kModelKeys.begin(), kModelKeys.end(), key) != kModelKeys.end()) {
    const auto it = std::find_if(run.model_keys.begin(), run.model_keys.end(), [&](const auto& kv) { return kv.first == key; });
    if (it != run.model_keys.end()) {
      it->second = value;
    } else {
      run.model_keys.emplace_back(key, value);
    }
  } else if (!training::apply_training_key(run.train, run.aam, key, value)) {
    invalid("unknown key " + key);
  }
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig run;
  for (const auto& [key, value] : key_values(text)) apply_run_key(run, key, value);
  return run;
}

RunConfig load_run_config(const std::string& path) { return parse_run_config(read_text(path)); }

models::ModelConfig resolve_model(const RunConfig& run, std::size_t n_classes) {
  auto lines = key_values(models::format_model_config(models::canonical_config(run.model, n_classes)));
  for (const auto& [key, value] : run.model_keys) {
    const auto it = std::find_if(lines.begin(), lines.end(), [&](const auto& kv) { return kv.first == key; });
    if (it != lines.end()) {
      it->second = value;
    } else {
      lines.emplace_back(key, value);
    }
  }
  std::string text;
  for (const auto& [key, value] : lines) text += key + " = " + value + "\n";
  return models::parse_model_config(text);
}

std::string repro_header(std::uint64_t seed, const std::string& config_text) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "# cv4code seed=%llu config_hash=%016llx image_format=%u checkpoint_format=%u\n",
                static_cast<unsigned long long>(seed), static_cast<unsigned long long>(fnv1a(config_text)),
                static_cast<unsigned>(codec::kImageFormatVersion),
                static_cast<unsigned>(training::kCheckpointFormatVersion));
  return buf;
}

// --- entry point -------------------------------------------------------------

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Code classification and retrieval on character-grid code images", "cv4code"};
  app.require_subcommand(1);
  Args a;

  auto* corpus_cmd = app.add_subcommand("corpus", "Corpus manifests")->require_subcommand(1);
  auto* scan = corpus_cmd->add_subcommand("scan", "Index <root>/<problem_id>/<files> into a manifest");
  scan->add_option("root", a.root, "Corpus root")->required()->check(CLI::ExistingDirectory);
  scan->add_option("-o,--output", a.output, "Manifest to write")->required();
  auto* split = corpus_cmd->add_subcommand("split", "Stratified train/validation/test assignment");
  split->add_option("manifest", a.manifest)->required()->check(CLI::ExistingFile);
  split->add_option("-o,--output", a.output)->required();
  split->add_option("--seed", a.seed);
  split->add_option("--ratios", a.ratios, "train,validation,test");
  auto* simset = corpus_cmd->add_subcommand("simset", "Sample a retrieval evaluation set from the test split");
  simset->add_option("manifest", a.manifest)->required()->check(CLI::ExistingFile);
  simset->add_option("-o,--output", a.output)->required();
  simset->add_option("--problems", a.problems);
  simset->add_option("--per-language", a.per_language);
  simset->add_option("--languages", a.languages, "Comma separated")->required();
  simset->add_option("--seed", a.seed);

  auto* enc = app.add_subcommand("encode", "Encode a source file as a code image");
  enc->add_option("source", a.root)->required()->check(CLI::ExistingFile);
  enc->add_option("-o,--output", a.output)->required();
  enc->add_option("--tab-width", a.tab_width);

  auto* insp = app.add_subcommand("inspect", "Print a code image (or a source file's image) as an index grid");
  insp->add_option("file", a.root)->required()->check(CLI::ExistingFile);
  insp->add_option("--tab-width", a.tab_width);

  auto* tr = app.add_subcommand("train", "Train a model on the train split, selecting on validation");
  tr->add_option("--config", a.config, "Run config (model, model keys, training keys)")->required()->check(CLI::ExistingFile);
  tr->add_option("--data", a.data, "Split manifest")->required()->check(CLI::ExistingFile);
  tr->add_option("--out", a.output, "Output directory")->required();
  tr->add_option("--set", a.sets, "key=value override");
  tr->add_option("--resume", a.resume, "Continue from a last.ckpt")->check(CLI::ExistingFile);
  tr->add_flag("--deterministic", a.deterministic, "Reproducible reductions (always on)");

  auto* ev = app.add_subcommand("eval", "Classification accuracy and/or retrieval mAP@R");
  ev->add_option("--ckpt", a.ckpt)->required()->check(CLI::ExistingFile);
  ev->add_option("--data", a.data, "Split manifest")->required()->check(CLI::ExistingFile);
  ev->add_option("--split", a.split, "Split to classify (default test)");
  ev->add_option("--sim", a.sim, "Sim set manifest")->check(CLI::ExistingFile);
  ev->add_option("-o,--output", a.output, "Report file");

  auto* em = app.add_subcommand("embed", "Export embeddings");
  em->add_option("--ckpt", a.ckpt)->required()->check(CLI::ExistingFile);
  em->add_option("--data", a.data)->required()->check(CLI::ExistingFile);
  em->add_option("--split", a.split, "train, validation, test or all (default all)");
  em->add_option("-o,--output", a.output)->required();

  auto* re = app.add_subcommand("retrieve", "Nearest neighbours of one embedding");
  re->add_option("--embeddings", a.embeddings)->required()->check(CLI::ExistingFile);
  re->add_option("--query", a.query, "Record id")->required();
  re->add_option("-k,--top", a.top);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (app.exit(e, out, err) == 0) return 0;
    err << app.help();
    return 2;
  }

  try {
    if (scan->parsed()) corpus_scan(a, out);
    else if (split->parsed()) corpus_split(a, out);
    else if (simset->parsed()) corpus_simset(a, out);
    else if (enc->parsed()) encode(a, out);
    else if (insp->parsed()) inspect(a, out);
    else if (tr->parsed()) train(a, out);
    else if (ev->parsed()) evaluate(a, out);
    else if (em->parsed()) embed(a, out);
    else if (re->parsed()) retrieve(a, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: IoError: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace cv4code::cli
