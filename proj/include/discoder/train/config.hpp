#pragma once

#include "discoder/core/latent.hpp"
#include "discoder/data/dataset.hpp"
#include "discoder/nn/network.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace discoder::train {

enum class Regularization { none, negative_sampling, class_conditioned, feature_matching };
enum class SelectionScope { batch, dataset };

std::string to_string(Regularization r);
std::string to_string(SelectionScope s);

struct EncoderArch {
  std::vector<std::size_t> hidden{512, 256};
  nn::ActivationKind activation = nn::ActivationKind::relu;
  double slope = 0.2;
  double dropout = 0.0;
};

struct GeneratorArch {
  std::vector<std::size_t> hidden{256};
  std::size_t noise_dim = 32;
  nn::ActivationKind output = nn::ActivationKind::sigmoid;
  std::optional<double> learning_rate;  // defaults to the encoder rate
};

struct LossWeights {
  double joint = 1.0;
  double supervised = 1.0;
  double confusion = 1.0;
};

/// Where the training data comes from.
///
///   format "idx":    images + labels (IDX, optionally gzipped)
///   format "dense":  path to a dense CSV
///   format "sparse": path to sparse text counts (tf-idf applied when `tfidf`)
struct DatasetSpec {
  std::string format = "dense";
  std::filesystem::path path;
  std::filesystem::path images;
  std::filesystem::path labels;
  std::optional<data::Normalization> normalization;  // convert dense/idx features to this range
  bool tfidf = true;
  std::optional<std::size_t> limit;  // first n samples only
};

struct EarlyStop {
  std::size_t patience = 0;  // 0 disables
  double tolerance = 1e-4;   // relative change of the epoch-mean joint loss
};

struct TrainConfig {
  core::EncodingHead head = core::CategoricalHead{10};
  std::optional<double> prior_radius;  // Gaussian head; default sqrt(m)
  std::size_t batch_size = 100;
  double learning_rate = 2e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t epochs = 1;
  std::uint64_t seed = 0;
  Regularization regularization = Regularization::none;
  std::optional<std::size_t> semi_supervised_per_class;
  EncoderArch encoder;
  GeneratorArch generator;
  std::size_t queue_capacity = 1000;
  std::size_t gaussian_steps = 25;
  std::optional<double> gaussian_step_size;
  LossWeights weights;
  SelectionScope selection_scope = SelectionScope::batch;
  std::size_t checkpoint_every = 0;  // 0: only at the end
  EarlyStop early_stop;
  std::optional<DatasetSpec> dataset;

  bool categorical() const noexcept { return std::holds_alternative<core::CategoricalHead>(head); }
  std::size_t latent_width() const;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
/// Parses and validates; unknown keys are rejected.
TrainConfig config_from_json(const nlohmann::json& j);
TrainConfig load_config(const std::filesystem::path& path);

/// Applies `key=value` to a JSON config. Dotted keys address nested objects;
/// the value is parsed as JSON when possible and taken as a string otherwise.
void apply_override(nlohmann::json& j, const std::string& assignment);

/// Encoder layer stack for an input width.
std::vector<nn::LayerSpec> encoder_layers(const TrainConfig& config, std::size_t input_dim);

}  // namespace discoder::train
