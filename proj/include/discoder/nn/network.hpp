#pragma once

#include "discoder/rng.hpp"
#include "discoder/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace discoder::nn {

enum class ActivationKind { relu, leaky_relu, tanh, sigmoid };

std::string to_string(ActivationKind kind);
ActivationKind parse_activation(const std::string& name);

struct Dense {
  std::size_t in = 0;
  std::size_t out = 0;
};

struct Activation {
  ActivationKind kind = ActivationKind::relu;
  double slope = 0.2;  // leaky_relu only
};

struct Dropout {
  double rate = 0.0;
};

/// Row-wise softmax over K logits.
struct SoftmaxHead {
  std::size_t classes = 0;
};

/// Identity head: the m-dimensional input is the Gaussian mean.
struct GaussianHead {
  std::size_t dim = 0;
};

using LayerSpec = std::variant<Dense, Activation, Dropout, SoftmaxHead, GaussianHead>;

struct ForwardResult {
  Matrix head_input;   // logits (softmax head) or means (Gaussian head)
  Matrix head_output;  // probabilities or means
  Matrix penultimate;  // input of the last Dense layer
};

struct Gradients {
  std::vector<Matrix> params;  // same order as Network::parameters()
  Matrix input;                // gradient with respect to the batch
};

/// Dense feed-forward network ending in exactly one head layer.
///
/// A forward pass with `training` set records a tape (layer inputs and
/// dropout masks) that the next backward call consumes; evaluation passes
/// leave the tape untouched.
class Network {
 public:
  explicit Network(std::vector<LayerSpec> layers);

  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t output_dim() const noexcept { return output_dim_; }
  std::size_t penultimate_dim() const noexcept { return penultimate_dim_; }
  bool softmax_head() const noexcept { return softmax_head_; }

  std::vector<Matrix>& parameters() noexcept { return params_; }
  const std::vector<Matrix>& parameters() const noexcept { return params_; }
  std::size_t parameter_count() const;

  /// Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)); zero biases.
  void init_params(std::uint64_t seed);

  ForwardResult forward(const Matrix& batch, bool training, Engine& rng);
  /// Evaluation pass: no dropout, no tape.
  ForwardResult forward(const Matrix& batch) const;

  /// Backpropagates a gradient given with respect to the head input
  /// (logits or means).
  Gradients backward(const Matrix& head_input_grad) const;
  /// Backpropagates a gradient injected at the penultimate activation.
  Gradients backward_from_penultimate(const Matrix& penultimate_grad) const;

  bool has_tape() const noexcept { return tape_.has_value(); }
  void clear_tape() noexcept { tape_.reset(); }

 private:
  struct Tape {
    std::vector<Matrix> inputs;               // input of each layer
    std::vector<std::optional<Matrix>> masks;  // dropout masks (scaled)
  };

  ForwardResult run(const Matrix& batch, bool training, Engine* rng, Tape* tape) const;
  Gradients backprop(std::size_t start_layer, Matrix grad) const;

  std::vector<LayerSpec> layers_;
  std::vector<Matrix> params_;
  std::vector<std::size_t> param_index_;  // first parameter slot per layer (Dense only)
  std::size_t input_dim_ = 0;
  std::size_t output_dim_ = 0;
  std::size_t penultimate_dim_ = 0;
  std::size_t last_dense_ = 0;
  bool softmax_head_ = false;
  std::optional<Tape> tape_;
};

/// Convenience builder for MLPs: Dense/activation pairs then a Dense into the head.
std::vector<LayerSpec> mlp(std::size_t input, const std::vector<std::size_t>& hidden,
                           std::size_t output, Activation activation, bool softmax,
                           double dropout = 0.0);

/// Row-wise numerically stable softmax.
Matrix softmax_rows(const Matrix& logits);

}  // namespace discoder::nn
