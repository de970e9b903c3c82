// discoder: train, evaluate and generate data for discriminative-encoder clustering.

#include "discoder/check/gradcheck.hpp"
#include "discoder/data/formats.hpp"
#include "discoder/data/synth.hpp"
#include "discoder/errors.hpp"
#include "discoder/eval/linear_probe.hpp"
#include "discoder/eval/report.hpp"
#include "discoder/nn/archive.hpp"
#include "discoder/train/trainer.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <numeric>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace discoder;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 2;
constexpr int kNumericalError = 3;

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", path.string() + ": " + e.what());
  }
}

// Relative dataset paths are taken relative to the config file.
void anchor_paths(json& config, const fs::path& base) {
  if (!config.contains("dataset") || !config["dataset"].is_object()) return;
  for (const char* key : {"path", "images", "labels"}) {
    auto& v = config["dataset"][key];
    if (v.is_string() && !v.get<std::string>().empty() && fs::path(v.get<std::string>()).is_relative())
      v = (base / v.get<std::string>()).lexically_normal().string();
  }
}

std::map<std::string, std::string> fingerprints(const train::DatasetSpec& spec) {
  std::map<std::string, std::string> out;
  for (const auto& p : {spec.path, spec.images, spec.labels})
    if (!p.empty() && fs::exists(p)) out[p.string()] = data::file_fingerprint(p);
  return out;
}

struct TrainArgs {
  fs::path config;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  fs::path out_dir = "run";
  std::optional<std::size_t> checkpoint_every;
  fs::path resume;
  bool quiet = false;
};

void write_report(const fs::path& out_dir, const train::Trainer& trainer, const train::TrainingSet& data) {
  std::string text = fmt::format("epochs trained: {}\n", trainer.epoch());
  if (!trainer.history().empty()) text += fmt::format("final joint loss: {}\n", trainer.history().back().joint_loss);
  if (trainer.config().categorical() && data.labels) {
    const auto report = eval::evaluate_clustering(trainer.head_outputs(), *data.labels);
    eval::write_report_csv(out_dir / "report.csv", report);
    text += eval::format_report(report);
  } else if (!trainer.config().categorical()) {
    text += "gaussian head: use `discoder eval --scheme probe` for a linear-probe accuracy\n";
  }
  nn::write_file_atomic(out_dir / "report.txt", text);
}

int cmd_train(const TrainArgs& a) {
  json j = read_json(a.config);
  if (j.contains("manifest_version")) j = j.at("config");  // replay from a run manifest
  anchor_paths(j, fs::absolute(a.config).parent_path());
  for (const auto& o : a.overrides) train::apply_override(j, o);
  if (a.seed) j["seed"] = *a.seed;
  if (a.checkpoint_every) j["checkpoint_every"] = *a.checkpoint_every;
  const auto config = train::config_from_json(j);
  if (!config.dataset) throw ConfigError("dataset", "required for training");
  const auto data = train::load_training_set(*config.dataset);

  fs::create_directories(a.out_dir);
  json manifest;
  manifest["manifest_version"] = 1;
  manifest["version"] = DISCODER_VERSION;
  manifest["seed"] = config.seed;
  manifest["config"] = train::to_json(config);
  manifest["dataset_fingerprint"] = fingerprints(*config.dataset);
  manifest["artifacts"] = {{"metrics", (a.out_dir / "metrics.csv").string()},
                           {"report", (a.out_dir / "report.txt").string()},
                           {"checkpoints", (a.out_dir / "checkpoints").string()}};
  if (!a.resume.empty()) manifest["resumed_from"] = a.resume.string();
  nn::write_file_atomic(a.out_dir / "manifest.json", manifest.dump(2) + "\n");

  auto trainer = a.resume.empty() ? train::Trainer(config, data) : train::Trainer::resume(a.resume, data);
  if (!a.resume.empty()) trainer.adopt_schedule(config);
  train::RunOptions opts;
  opts.out_dir = a.out_dir;
  if (!a.quiet)
    opts.on_epoch = [&](const train::EpochMetrics& m) {
      std::string line = fmt::format("epoch {:>4}  joint {:.6f}", m.epoch, m.joint_loss);
      if (m.supervised_loss) line += fmt::format("  supervised {:.6f}", *m.supervised_loss);
      if (m.confusion_loss) line += fmt::format("  confusion {:.6f}", *m.confusion_loss);
      if (m.generator_loss) line += fmt::format("  generator {:.6f}", *m.generator_loss);
      if (m.clustering_error) line += fmt::format("  error {:.2f}%", *m.clustering_error);
      std::cout << line << std::endl;
    };
  const auto result = train::run(trainer, opts);
  write_report(a.out_dir, trainer, data);
  if (!a.quiet) {
    if (result.stopped_early) std::cout << "stopped early at epoch " << trainer.epoch() << "\n";
    std::cout << "wrote " << (a.out_dir / "metrics.csv").string() << ", " << (a.out_dir / "report.txt").string() << "\n";
  }
  return kOk;
}

struct EvalArgs {
  fs::path checkpoint;
  std::string scheme = "both";
  std::vector<std::string> overrides;
  fs::path out_dir = ".";
  std::size_t probe_per_class = 100;
  std::uint64_t seed = 0;
};

int cmd_eval(const EvalArgs& a) {
  json state = read_json(a.checkpoint / "state.json");
  json j = state.at("config");
  for (const auto& o : a.overrides) train::apply_override(j, o);
  const auto config = train::config_from_json(j);
  if (!config.dataset) throw ConfigError("dataset", "the checkpoint config names no dataset; pass --override dataset.path=...");
  const auto data = train::load_training_set(*config.dataset);
  if (!data.labels) throw ConfigError("dataset", "evaluation needs labels");
  const auto encoder = nn::load_network(a.checkpoint / "encoder.disc");
  if (encoder.input_dim() != static_cast<std::size_t>(data.features.cols()))
    throw InputError("eval: dataset width does not match the encoder input");

  fs::create_directories(a.out_dir);
  const bool clustering = a.scheme == "both" || a.scheme == "intersection" || a.scheme == "confidence";
  std::string text;
  if (clustering) {
    if (!encoder.softmax_head())
      throw ConfigError("--scheme", "clustering schemes need a categorical head; use --scheme probe");
    const auto report = eval::evaluate_clustering(encoder.forward(data.features).head_output, *data.labels);
    eval::write_report_csv(a.out_dir / "report.csv", report);
    text = eval::format_report(report);
  } else if (a.scheme == "probe") {
    const auto split = data::split_semi_supervised(*data.labels, a.probe_per_class, derive_seed(a.seed, "probe_split"));
    const auto train_ids = split.flat_labeled();
    const auto probe = eval::linear_probe(encoder.forward(data.features).penultimate, *data.labels, train_ids,
                                          split.unlabeled_ids, {.seed = a.seed});
    text = fmt::format("linear probe ({} labels/class): train {:.3f}%  test {:.3f}%\n", a.probe_per_class,
                       probe.train_accuracy, probe.test_accuracy);
  } else {
    throw ConfigError("--scheme", "expected both, intersection, confidence or probe");
  }
  nn::write_file_atomic(a.out_dir / "report.txt", text);
  std::cout << text;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"discoder: discriminative encoder clustering and feature learning"};
  app.set_version_flag("--version", DISCODER_VERSION);
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "train an encoder from a JSON config");
  train_cmd->add_option("--config", ta.config, "config file (or a run manifest to replay)")->required();
  train_cmd->add_option("--seed", ta.seed, "master seed (overrides the config)");
  train_cmd->add_option("--override", ta.overrides, "key=value, dotted keys for nested fields")->take_all();
  train_cmd->add_option("--out-dir", ta.out_dir, "output directory");
  train_cmd->add_option("--checkpoint-every", ta.checkpoint_every, "checkpoint period in epochs");
  train_cmd->add_option("--resume", ta.resume, "checkpoint directory to continue from");
  train_cmd->add_flag("--quiet", ta.quiet, "no per-epoch output");

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", ea.checkpoint, "checkpoint directory")->required();
  eval_cmd->add_option("--scheme", ea.scheme, "both, intersection, confidence or probe");
  eval_cmd->add_option("--override", ea.overrides, "config overrides, e.g. dataset.path=test.csv")->take_all();
  eval_cmd->add_option("--out-dir", ea.out_dir, "output directory");
  eval_cmd->add_option("--probe-labels", ea.probe_per_class, "labels per class for the probe");
  eval_cmd->add_option("--seed", ea.seed, "probe seed");

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
  synth_cmd->require_subcommand(1);
  std::size_t clusters = 4, dim = 2, n_per = 100;
  double separation = 6.0, cluster_std = 1.0;
  std::uint64_t synth_seed = 0;
  fs::path synth_out;
  auto* gmm_cmd = synth_cmd->add_subcommand("gmm", "Gaussian clusters as dense CSV");
  gmm_cmd->add_option("--clusters", clusters);
  gmm_cmd->add_option("--dim", dim);
  gmm_cmd->add_option("--n", n_per, "points per cluster");
  gmm_cmd->add_option("--separation", separation);
  gmm_cmd->add_option("--std", cluster_std);
  gmm_cmd->add_option("--seed", synth_seed);
  gmm_cmd->add_option("--out", synth_out)->required();
  data::TopicCorpusSpec topics;
  auto* topic_cmd = synth_cmd->add_subcommand("topics", "bag-of-words corpus as sparse text counts");
  topic_cmd->add_option("--classes", topics.classes);
  topic_cmd->add_option("--vocab", topics.vocab_size);
  topic_cmd->add_option("--docs-per-class", topics.docs_per_class);
  topic_cmd->add_option("--mean-length", topics.mean_length);
  topic_cmd->add_option("--seed", topics.seed);
  topic_cmd->add_option("--out", synth_out)->required();

  std::uint64_t check_seed = 0;
  auto* check_cmd = app.add_subcommand("checkgrad", "finite-difference check of every analytic gradient");
  check_cmd->add_option("--seed", check_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*train_cmd) return cmd_train(ta);
    if (*eval_cmd) return cmd_eval(ea);
    if (*gmm_cmd) {
      auto ds = data::synth_gmm(clusters, dim, n_per, separation, cluster_std, synth_seed);
      data::write_dense_csv(synth_out, ds);
      std::cout << "wrote " << ds.size() << " samples to " << synth_out.string() << "\n";
      return kOk;
    }
    if (*topic_cmd) {
      auto corpus = data::synth_topic_corpus(topics);
      data::write_sparse_text(synth_out, corpus);
      std::cout << "wrote " << corpus.size() << " documents to " << synth_out.string() << "\n";
      return kOk;
    }
    if (*check_cmd) {
      bool ok = true;
      for (const auto& r : check::run_gradient_suite(check_seed)) {
        std::cout << fmt::format("{} {:<45} max rel error {:.3e} over {} entries\n", r.passed ? "PASS" : "FAIL", r.name,
                                 r.max_rel_error, r.entries);
        ok = ok && r.passed;
      }
      return ok ? kOk : kNumericalError;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kInputError;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumericalError;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kOk;
}
