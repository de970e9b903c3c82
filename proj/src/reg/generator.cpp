#include "discoder/reg/generator.hpp"

#include "discoder/errors.hpp"

#include <random>

namespace discoder::reg {

std::string to_string(GeneratorMode mode) {
  return mode == GeneratorMode::class_conditioned ? "class_conditioned" : "feature_matching";
}

namespace {

nn::Network build(const GeneratorSpec& s) {
  if (s.noise_dim == 0) throw InputError("generator: noise_dim must be positive");
  if (s.data_dim == 0) throw InputError("generator: data_dim must be positive");
  if (s.mode == GeneratorMode::class_conditioned && s.classes == 0)
    throw InputError("generator: class-conditioned mode needs the class count");
  const std::size_t in = s.noise_dim + (s.mode == GeneratorMode::class_conditioned ? s.classes : 0);
  std::vector<nn::LayerSpec> layers;
  std::size_t width = in;
  for (std::size_t h : s.hidden) {
    layers.emplace_back(nn::Dense{width, h});
    layers.emplace_back(nn::Activation{s.hidden_activation});
    width = h;
  }
  layers.emplace_back(nn::Dense{width, s.data_dim});
  layers.emplace_back(nn::Activation{s.output_activation});
  layers.emplace_back(nn::GaussianHead{s.data_dim});
  return nn::Network(std::move(layers));
}

}  // namespace

Generator::Generator(const GeneratorSpec& spec)
    : network_(build(spec)),
      noise_dim_(spec.noise_dim),
      classes_(spec.mode == GeneratorMode::class_conditioned ? spec.classes : 0),
      mode_(spec.mode) {}

Generator::Generator(nn::Network network, std::size_t noise_dim, std::size_t classes, GeneratorMode mode)
    : network_(std::move(network)),
      noise_dim_(noise_dim),
      classes_(mode == GeneratorMode::class_conditioned ? classes : 0),
      mode_(mode) {
  if (network_.input_dim() != noise_dim_ + classes_)
    throw InputError("generator: network input " + std::to_string(network_.input_dim()) +
                     " does not equal noise_dim + classes");
  if (network_.softmax_head()) throw InputError("generator: network must end in an identity head");
}

Matrix Generator::sample_noise(std::size_t count, Engine& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix n(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(noise_dim_));
  for (Eigen::Index i = 0; i < n.size(); ++i) n.data()[i] = normal(rng);
  return n;
}

Matrix Generator::generate_class_conditioned(std::span<const core::OneHot> z, Engine& rng, bool training) {
  if (mode_ != GeneratorMode::class_conditioned)
    throw InputError("generate_class_conditioned: generator is in feature-matching mode");
  const auto b = static_cast<Eigen::Index>(z.size());
  Matrix input = Matrix::Zero(b, static_cast<Eigen::Index>(noise_dim_ + classes_));
  input.leftCols(static_cast<Eigen::Index>(noise_dim_)) = sample_noise(z.size(), rng);
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto& code = z[static_cast<std::size_t>(i)];
    if (code.index >= classes_) throw InputError("generate_class_conditioned: latent class out of range");
    input(i, static_cast<Eigen::Index>(noise_dim_ + code.index)) = 1.0;
  }
  if (b == 0) return Matrix(0, static_cast<Eigen::Index>(data_dim()));
  return network_.forward(input, training, rng).head_output;
}

Matrix Generator::generate(std::size_t count, Engine& rng, bool training) {
  if (mode_ != GeneratorMode::feature_matching)
    throw InputError("generate: generator is in class-conditioned mode");
  if (count == 0) return Matrix(0, static_cast<Eigen::Index>(data_dim()));
  return network_.forward(sample_noise(count, rng), training, rng).head_output;
}

core::LossAndGrad generator_loss_class_conditioned(const core::CategoricalEncodings& enc,
                                                   std::span<const core::OneHot> z) {
  const Eigen::Index b = static_cast<Eigen::Index>(enc.batch_size());
  if (static_cast<Eigen::Index>(z.size()) != b) throw InputError("generator loss: code count does not match batch");
  if (b == 0) throw InputError("generator loss: empty batch");
  const Matrix& logp = enc.log_probs();
  core::LossAndGrad out{0.0, logp.array().exp().matrix()};
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto k = static_cast<Eigen::Index>(z[static_cast<std::size_t>(i)].index);
    if (k >= logp.cols()) throw InputError("generator loss: latent class out of range");
    out.loss -= logp(i, k);
    out.grad(i, k) -= 1.0;
  }
  out.loss /= static_cast<double>(b);
  out.grad /= static_cast<double>(b);
  return out;
}

core::LossAndGrad generator_loss_through_encoder(nn::Network& encoder, const Matrix& fakes,
                                                 std::span<const core::OneHot> z, Engine& rng) {
  if (!encoder.softmax_head()) throw InputError("generator loss: encoder must have a categorical head");
  const auto fwd = encoder.forward(fakes, true, rng);
  auto lg = generator_loss_class_conditioned(core::CategoricalEncodings::from_logits(fwd.head_input), z);
  return {lg.loss, encoder.backward(lg.grad).input};
}

core::LossAndGrad feature_matching_loss(const Matrix& penult_real, const Matrix& penult_fake) {
  if (penult_real.rows() == 0 || penult_fake.rows() == 0) throw InputError("feature matching: empty batch");
  if (penult_real.cols() != penult_fake.cols())
    throw InputError("feature matching: widths " + std::to_string(penult_real.cols()) + " and " +
                     std::to_string(penult_fake.cols()) + " differ");
  const RowVector diff = penult_real.colwise().mean() - penult_fake.colwise().mean();
  core::LossAndGrad out;
  out.loss = diff.squaredNorm();
  const RowVector row_grad = -2.0 / static_cast<double>(penult_fake.rows()) * diff;
  out.grad = row_grad.replicate(penult_fake.rows(), 1);
  return out;
}

core::LossAndGrad feature_matching_through_encoder(nn::Network& encoder, const Matrix& penult_real,
                                                   const Matrix& fakes, Engine& rng) {
  const auto fwd = encoder.forward(fakes, true, rng);
  auto lg = feature_matching_loss(penult_real, fwd.penultimate);
  return {lg.loss, encoder.backward_from_penultimate(lg.grad).input};
}

}  // namespace discoder::reg
