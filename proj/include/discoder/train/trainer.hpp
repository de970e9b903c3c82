#pragma once

#include "discoder/core/latent.hpp"
#include "discoder/data/dataset.hpp"
#include "discoder/data/split.hpp"
#include "discoder/data/tfidf.hpp"
#include "discoder/nn/adam.hpp"
#include "discoder/nn/network.hpp"
#include "discoder/reg/generator.hpp"
#include "discoder/reg/negative_sampler.hpp"
#include "discoder/train/config.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace discoder::train {

/// Everything a run reads from its data. Must outlive the Trainer using it.
struct TrainingSet {
  Matrix features;
  std::optional<data::Labels> labels;
  std::optional<reg::NegativeSampler> sampler;  // negative sampling
  std::optional<data::TfIdfModel> tfidf;        // applied to sampled fake documents

  /// Dense features only.
  static TrainingSet from_dense(const data::DenseDataset& ds);
  /// tf-idf features of a raw count corpus plus a sampler over its word frequencies.
  static TrainingSet from_counts(const data::SparseDataset& counts);
};

/// Reads the dataset a config points at. Missing files raise InputError naming the path.
TrainingSet load_training_set(const DatasetSpec& spec);

struct StepMetrics {
  double joint_loss = 0.0;  // per sample
  std::optional<double> supervised_loss;
  std::optional<double> confusion_loss;
  std::optional<double> generator_loss;
};

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double joint_loss = 0.0;
  std::optional<double> supervised_loss;
  std::optional<double> confusion_loss;
  std::optional<double> generator_loss;
  std::optional<double> clustering_error;  // max-intersection, categorical head with labels
};

/// Algorithm state for one run: networks, optimizers, random streams,
/// recent-sample queue and metrics history.
class Trainer {
 public:
  Trainer(TrainConfig config, const TrainingSet& data);

  /// Restores the state saved by save_checkpoint; the config comes from the checkpoint.
  static Trainer resume(const std::filesystem::path& checkpoint_dir, const TrainingSet& data);

  const TrainConfig& config() const noexcept { return config_; }
  std::size_t epoch() const noexcept { return epoch_; }
  const std::vector<EpochMetrics>& history() const noexcept { return history_; }
  bool finished() const noexcept { return epoch_ >= config_.epochs; }

  /// Changes the epoch budget, checkpoint period and early stopping of a
  /// (resumed) run. Every other field must equal the current config.
  void adopt_schedule(const TrainConfig& config);

  nn::Network& encoder() noexcept { return encoder_; }
  const nn::Network& encoder() const noexcept { return encoder_; }
  const std::optional<reg::Generator>& generator() const noexcept { return generator_; }
  const core::RecentQueue& queue() const noexcept { return queue_; }
  const std::vector<std::size_t>& labeled_pool() const noexcept { return labeled_pool_; }

  /// Selection, encoder updates and regularization for one batch of sample ids.
  StepMetrics train_step(std::span<const std::size_t> batch_ids);
  /// ceil(n/b) steps over a freshly shuffled order, then epoch metrics.
  EpochMetrics train_epoch();

  /// Head outputs for every sample (evaluation mode).
  Matrix head_outputs() const;
  /// Penultimate activations for every sample (evaluation mode).
  Matrix embeddings() const;

  void save_checkpoint(const std::filesystem::path& dir) const;

 private:
  struct Restore {};
  Trainer(TrainConfig config, const TrainingSet& data, Restore);

  Matrix gather(std::span<const std::size_t> ids) const;
  void refresh_normalizer();
  double update_encoder(const Matrix& head_grad, nn::AdamState& adam, double weight);
  double confusion_step(const Matrix& fakes);
  std::vector<std::size_t> next_labeled_batch(std::size_t size);

  TrainConfig config_;
  const TrainingSet* data_;
  nn::Network encoder_;
  std::optional<reg::Generator> generator_;
  nn::AdamState adam_joint_;
  nn::AdamState adam_supervised_;
  nn::AdamState adam_confusion_;
  nn::AdamState adam_generator_;
  std::optional<core::CategoricalPrior> categorical_prior_;
  std::optional<core::SpherePrior> sphere_prior_;
  core::RecentQueue queue_;
  Engine dropout_rng_;
  Engine noise_rng_;
  Engine sampler_rng_;
  std::vector<std::size_t> labeled_pool_;
  std::size_t labeled_cursor_ = 0;
  std::optional<Vector> dataset_log_sums_;
  std::size_t epoch_ = 0;
  std::vector<EpochMetrics> history_;
};

struct RunOptions {
  std::filesystem::path out_dir;         // metrics.csv and checkpoints/ go here when set
  std::optional<std::size_t> checkpoint_every;  // overrides the config value
  std::optional<std::size_t> stop_after;        // halt after this epoch (simulated interruption)
  std::function<void(const EpochMetrics&)> on_epoch;
};

struct RunResult {
  std::vector<std::filesystem::path> checkpoints;
  bool stopped_early = false;
};

/// Trains until the epoch budget, an early stop or `stop_after`. A
/// non-finite loss raises NumericalError naming the last good checkpoint.
RunResult run(Trainer& trainer, const RunOptions& options = {});

void write_metrics_csv(const std::filesystem::path& path, const std::vector<EpochMetrics>& history);

/// "epoch-0012" style directory name.
std::string checkpoint_name(std::size_t epoch);

}  // namespace discoder::train
