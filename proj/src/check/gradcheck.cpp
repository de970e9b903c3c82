#include "discoder/check/gradcheck.hpp"

#include "discoder/core/objectives.hpp"
#include "discoder/nn/network.hpp"
#include "discoder/reg/generator.hpp"
#include "discoder/rng.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace discoder::check {

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-7});
}

GradCheckResult check_gradient(std::string name, const std::function<double(const Matrix&)>& f, const Matrix& x,
                               const Matrix& grad, double step, double tolerance) {
  GradCheckResult r{std::move(name), 0.0, 0, true};
  Matrix probe = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double saved = probe(i, j);
      probe(i, j) = saved + step;
      const double up = f(probe);
      probe(i, j) = saved - step;
      const double down = f(probe);
      probe(i, j) = saved;
      const double numeric = (up - down) / (2.0 * step);
      r.max_rel_error = std::max(r.max_rel_error, relative_error(grad(i, j), numeric));
      ++r.entries;
    }
  r.passed = r.max_rel_error < tolerance;
  return r;
}

namespace {

using core::CategoricalEncodings;
using core::OneHot;

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, Engine& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

std::vector<OneHot> random_codes(std::size_t b, std::size_t k, Engine& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, k - 1);
  std::vector<OneHot> z;
  for (std::size_t i = 0; i < b; ++i) z.push_back({pick(rng), k});
  return z;
}

// Zero biases put dead-unit rows exactly on the relu kink; move off it.
void randomize_biases(nn::Network& net, Engine& rng) {
  for (std::size_t p = 1; p < net.parameters().size(); p += 2) net.parameters()[p] = gaussian(1, net.parameters()[p].cols(), rng, 0.1);
}

// Checks d/dparams and d/dinput of <G, head_input> for a network, in training
// mode with the dropout masks frozen by replaying the same engine state.
void check_network(std::vector<GradCheckResult>& out, const std::string& name, std::vector<nn::LayerSpec> layers,
                   std::size_t in, std::uint64_t seed, bool from_penultimate = false) {
  Engine rng(seed);
  nn::Network net(std::move(layers));
  net.init_params(seed);
  randomize_biases(net, rng);
  const Matrix x = gaussian(5, static_cast<Eigen::Index>(in), rng);
  const Engine mask_rng = rng;
  Engine run_rng = mask_rng;
  const auto fwd = net.forward(x, true, run_rng);
  const Matrix& target = from_penultimate ? fwd.penultimate : fwd.head_input;
  const Matrix g = gaussian(target.rows(), target.cols(), rng);
  const auto grads = from_penultimate ? net.backward_from_penultimate(g) : net.backward(g);

  auto objective = [&](const nn::Network& n) {
    Engine r = mask_rng;
    auto copy = n;
    const auto f = copy.forward(x, true, r);
    return ((from_penultimate ? f.penultimate : f.head_input).array() * g.array()).sum();
  };
  for (std::size_t p = 0; p < net.parameters().size(); ++p) {
    auto f = [&](const Matrix& value) {
      auto copy = net;
      copy.parameters()[p] = value;
      return objective(copy);
    };
    out.push_back(check_gradient(name + " param " + std::to_string(p), f, net.parameters()[p], grads.params[p]));
  }
  if (!from_penultimate) {
    auto f = [&](const Matrix& input) {
      Engine r = mask_rng;
      auto copy = net;
      return (copy.forward(input, true, r).head_input.array() * g.array()).sum();
    };
    out.push_back(check_gradient(name + " input", f, x, grads.input));
  }
}

}  // namespace

std::vector<GradCheckResult> run_gradient_suite(std::uint64_t seed) {
  std::vector<GradCheckResult> out;
  Engine rng = make_stream(seed, "gradcheck");
  const std::size_t d = 5, k = 4, b = 6;

  using nn::ActivationKind;
  for (auto act : {ActivationKind::tanh, ActivationKind::sigmoid, ActivationKind::leaky_relu, ActivationKind::relu})
    check_network(out, "network softmax " + nn::to_string(act), nn::mlp(d, {7, 6}, k, nn::Activation{act}, true), d,
                  rng());
  check_network(out, "network gaussian dropout", nn::mlp(d, {8}, 3, nn::Activation{ActivationKind::tanh}, false, 0.3), d,
                rng());
  check_network(out, "network penultimate", nn::mlp(d, {7, 6}, k, nn::Activation{ActivationKind::tanh}, true), d, rng(),
                true);

  const Matrix logits = gaussian(b, k, rng, 1.5);
  {
    const auto z = core::select_latent_categorical(CategoricalEncodings::from_logits(logits));
    const auto lg = core::encoder_loss_categorical(CategoricalEncodings::from_logits(logits), z);
    out.push_back(check_gradient(
        "encoder loss categorical",
        [&](const Matrix& l) { return core::encoder_loss_categorical(CategoricalEncodings::from_logits(l), z).loss; },
        logits, lg.grad));
    const auto zr = random_codes(b, k, rng);
    const auto lr = core::encoder_loss_categorical(CategoricalEncodings::from_logits(logits), zr);
    out.push_back(check_gradient(
        "encoder loss categorical random codes",
        [&](const Matrix& l) { return core::encoder_loss_categorical(CategoricalEncodings::from_logits(l), zr).loss; },
        logits, lr.grad));
  }
  {
    const double lambda = 0.7;
    const Matrix phi = gaussian(b, 3, rng);
    Matrix z = gaussian(b, 3, rng);
    const core::SpherePrior sphere(3);
    for (Eigen::Index i = 0; i < z.rows(); ++i) z.row(i) = sphere.project(z.row(i).transpose()).transpose();
    const auto lg = core::encoder_loss_gaussian(phi, z, lambda);
    out.push_back(check_gradient(
        "encoder loss gaussian", [&](const Matrix& p) { return core::encoder_loss_gaussian(p, z, lambda).loss; }, phi,
        lg.grad));
  }
  {
    const core::CategoricalPrior prior({0.1, 0.2, 0.3, 0.4});
    const auto lg = core::confusion_loss(CategoricalEncodings::from_logits(logits), prior);
    out.push_back(check_gradient(
        "confusion loss",
        [&](const Matrix& l) { return core::confusion_loss(CategoricalEncodings::from_logits(l), prior).loss; }, logits,
        lg.grad));
  }
  {
    std::vector<std::size_t> labels;
    for (const auto& c : random_codes(b, k, rng)) labels.push_back(c.index);
    const auto lg = core::supervised_loss(CategoricalEncodings::from_logits(logits), labels);
    out.push_back(check_gradient(
        "supervised loss",
        [&](const Matrix& l) { return core::supervised_loss(CategoricalEncodings::from_logits(l), labels).loss; }, logits,
        lg.grad));
  }
  {
    const auto z = random_codes(b, k, rng);
    const auto lg = reg::generator_loss_class_conditioned(CategoricalEncodings::from_logits(logits), z);
    out.push_back(check_gradient(
        "generator loss class-conditioned",
        [&](const Matrix& l) { return reg::generator_loss_class_conditioned(CategoricalEncodings::from_logits(l), z).loss; },
        logits, lg.grad));

    nn::Network encoder(nn::mlp(d, {7}, k, nn::Activation{ActivationKind::tanh}, true, 0.2));
    encoder.init_params(rng());
    const Matrix fakes = gaussian(b, d, rng);
    const Engine state = rng;
    Engine r = state;
    const auto gl = reg::generator_loss_through_encoder(encoder, fakes, z, r);
    out.push_back(check_gradient(
        "generator loss through encoder",
        [&](const Matrix& f) {
          Engine rr = state;
          return reg::generator_loss_through_encoder(encoder, f, z, rr).loss;
        },
        fakes, gl.grad));

    const Matrix real_pen = gaussian(b + 2, 7, rng);
    const Matrix fake_pen = gaussian(b, 7, rng);
    const auto fm = reg::feature_matching_loss(real_pen, fake_pen);
    out.push_back(check_gradient(
        "feature matching", [&](const Matrix& f) { return reg::feature_matching_loss(real_pen, f).loss; }, fake_pen,
        fm.grad));
    Engine r2 = state;
    const auto fe = reg::feature_matching_through_encoder(encoder, real_pen, fakes, r2);
    out.push_back(check_gradient(
        "feature matching through encoder",
        [&](const Matrix& f) {
          Engine rr = state;
          return reg::feature_matching_through_encoder(encoder, real_pen, f, rr).loss;
        },
        fakes, fe.grad));
  }
  {
    // end to end: joint loss with respect to encoder parameters, codes held fixed
    nn::Network encoder(nn::mlp(d, {7}, k, nn::Activation{ActivationKind::leaky_relu}, true));
    encoder.init_params(rng());
    randomize_biases(encoder, rng);
    const Matrix x = gaussian(b, d, rng);
    Engine r = rng;
    const auto fwd = encoder.forward(x, true, r);
    const auto z = core::select_latent_categorical(CategoricalEncodings::from_logits(fwd.head_input));
    const auto lg = core::encoder_loss_categorical(CategoricalEncodings::from_logits(fwd.head_input), z);
    const auto grads = encoder.backward(lg.grad);
    for (std::size_t p = 0; p < encoder.parameters().size(); ++p)
      out.push_back(check_gradient(
          "joint loss encoder param " + std::to_string(p),
          [&](const Matrix& value) {
            auto copy = encoder;
            copy.parameters()[p] = value;
            return core::encoder_loss_categorical(CategoricalEncodings::from_logits(copy.forward(x).head_input), z).loss;
          },
          encoder.parameters()[p], grads.params[p]));
  }
  return out;
}

}  // namespace discoder::check
