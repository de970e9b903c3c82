#pragma once

#include "discoder/core/latent.hpp"
#include "discoder/core/objectives.hpp"
#include "discoder/nn/network.hpp"
#include "discoder/rng.hpp"

#include <span>
#include <string>
#include <vector>

namespace discoder::reg {

enum class GeneratorMode { class_conditioned, feature_matching };

std::string to_string(GeneratorMode mode);

struct GeneratorSpec {
  std::size_t noise_dim = 32;
  std::vector<std::size_t> hidden{256};
  std::size_t data_dim = 0;
  std::size_t classes = 0;  // one-hot width appended to the noise (class_conditioned only)
  nn::ActivationKind hidden_activation = nn::ActivationKind::relu;
  nn::ActivationKind output_activation = nn::ActivationKind::sigmoid;  // tanh for [-1,1] data
  GeneratorMode mode = GeneratorMode::feature_matching;
};

/// Dense generator G(n) or G(n, z): noise (and one-hot code) in, a fake
/// sample squashed to the data range out.
class Generator {
 public:
  explicit Generator(const GeneratorSpec& spec);
  /// Wraps an existing (e.g. checkpointed) network; checks its input width.
  Generator(nn::Network network, std::size_t noise_dim, std::size_t classes, GeneratorMode mode);

  GeneratorMode mode() const noexcept { return mode_; }
  std::size_t noise_dim() const noexcept { return noise_dim_; }
  std::size_t classes() const noexcept { return classes_; }
  std::size_t data_dim() const noexcept { return network_.output_dim(); }
  nn::Network& network() noexcept { return network_; }
  const nn::Network& network() const noexcept { return network_; }

  Matrix sample_noise(std::size_t count, Engine& rng) const;

  /// xbar = G(n, z) with n ~ N(0, I) drawn from `rng`. With `training` the
  /// generator tape is recorded for a following backward pass.
  Matrix generate_class_conditioned(std::span<const core::OneHot> z, Engine& rng, bool training = false);
  /// xbar = G(n) for feature matching.
  Matrix generate(std::size_t count, Engine& rng, bool training = false);

 private:
  nn::Network network_;
  std::size_t noise_dim_;
  std::size_t classes_;
  GeneratorMode mode_;
};

/// -mean_i log p(z_i | xbar_i); gradient with respect to the encoder logits.
core::LossAndGrad generator_loss_class_conditioned(const core::CategoricalEncodings& encoder_output_on_fakes,
                                                   std::span<const core::OneHot> z);

/// Same loss with the gradient carried back through a frozen encoder to the fake inputs.
core::LossAndGrad generator_loss_through_encoder(nn::Network& encoder, const Matrix& fakes,
                                                 std::span<const core::OneHot> z, Engine& rng);

/// ||mean_rows(real) - mean_rows(fake)||^2; gradient with respect to the fake rows.
core::LossAndGrad feature_matching_loss(const Matrix& penult_real, const Matrix& penult_fake);

/// Feature matching with the gradient carried back through a frozen encoder to the fake inputs.
core::LossAndGrad feature_matching_through_encoder(nn::Network& encoder, const Matrix& penult_real,
                                                   const Matrix& fakes, Engine& rng);

}  // namespace discoder::reg
