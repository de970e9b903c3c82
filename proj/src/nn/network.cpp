#include "discoder/nn/network.hpp"

#include "discoder/errors.hpp"

#include <cmath>

namespace discoder::nn {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void apply_activation(const Activation& a, Matrix& h) {
  switch (a.kind) {
    case ActivationKind::relu:
      h = h.cwiseMax(0.0);
      break;
    case ActivationKind::leaky_relu:
      h = h.unaryExpr([s = a.slope](double v) { return v > 0.0 ? v : s * v; });
      break;
    case ActivationKind::tanh:
      h = h.array().tanh().matrix();
      break;
    case ActivationKind::sigmoid:
      h = h.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
      break;
  }
}

// grad *= f'(input)
void activation_backward(const Activation& a, const Matrix& input, Matrix& grad) {
  switch (a.kind) {
    case ActivationKind::relu:
      grad = grad.cwiseProduct(input.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
      break;
    case ActivationKind::leaky_relu:
      grad = grad.cwiseProduct(
          input.unaryExpr([s = a.slope](double v) { return v > 0.0 ? 1.0 : s; }));
      break;
    case ActivationKind::tanh:
      grad = grad.cwiseProduct(input.unaryExpr([](double v) {
        const double t = std::tanh(v);
        return 1.0 - t * t;
      }));
      break;
    case ActivationKind::sigmoid:
      grad = grad.cwiseProduct(input.unaryExpr([](double v) {
        const double s = 1.0 / (1.0 + std::exp(-v));
        return s * (1.0 - s);
      }));
      break;
  }
}

}  // namespace

std::string to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::relu: return "relu";
    case ActivationKind::leaky_relu: return "leaky_relu";
    case ActivationKind::tanh: return "tanh";
    case ActivationKind::sigmoid: return "sigmoid";
  }
  return "?";
}

ActivationKind parse_activation(const std::string& name) {
  if (name == "relu") return ActivationKind::relu;
  if (name == "leaky_relu" || name == "lrelu") return ActivationKind::leaky_relu;
  if (name == "tanh") return ActivationKind::tanh;
  if (name == "sigmoid") return ActivationKind::sigmoid;
  throw InputError("unknown activation '" + name + "'");
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double mx = logits.row(r).maxCoeff();
    out.row(r) = (logits.row(r).array() - mx).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

Network::Network(std::vector<LayerSpec> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw InputError("network: no layers");
  std::optional<std::size_t> width;
  bool seen_dense = false;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const bool last = l + 1 == layers_.size();
    const std::string where = "network layer " + std::to_string(l) + ": ";
    std::visit(
        overloaded{
            [&](const Dense& d) {
              if (d.in == 0 || d.out == 0) throw InputError(where + "dense dimensions must be positive");
              if (width && *width != d.in)
                throw InputError(where + "dense input " + std::to_string(d.in) +
                                 " does not match width " + std::to_string(*width));
              if (!seen_dense) input_dim_ = d.in;
              seen_dense = true;
              param_index_.push_back(params_.size());
              params_.emplace_back(Matrix::Zero(d.in, d.out));
              params_.emplace_back(Matrix::Zero(1, d.out));
              last_dense_ = l;
              penultimate_dim_ = d.in;
              width = d.out;
            },
            [&](const Activation& a) {
              if (a.kind == ActivationKind::leaky_relu && !(a.slope >= 0.0 && a.slope < 1.0))
                throw InputError(where + "leaky relu slope must lie in [0,1)");
              param_index_.push_back(params_.size());
            },
            [&](const Dropout& d) {
              if (!(d.rate >= 0.0 && d.rate < 1.0)) throw InputError(where + "dropout rate must lie in [0,1)");
              param_index_.push_back(params_.size());
            },
            [&](const SoftmaxHead& h) {
              if (!last) throw InputError(where + "head layer must be last");
              if (!width || *width != h.classes)
                throw InputError(where + "softmax head width does not match previous layer");
              softmax_head_ = true;
              output_dim_ = h.classes;
              param_index_.push_back(params_.size());
            },
            [&](const GaussianHead& h) {
              if (!last) throw InputError(where + "head layer must be last");
              if (!width || *width != h.dim)
                throw InputError(where + "gaussian head width does not match previous layer");
              output_dim_ = h.dim;
              param_index_.push_back(params_.size());
            },
        },
        layers_[l]);
  }
  const bool head_last = std::holds_alternative<SoftmaxHead>(layers_.back()) ||
                         std::holds_alternative<GaussianHead>(layers_.back());
  if (!head_last) throw InputError("network: last layer must be a softmax or gaussian head");
  if (!seen_dense) throw InputError("network: at least one dense layer required");
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.size());
  return n;
}

void Network::init_params(std::uint64_t seed) {
  Engine rng(seed);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto* d = std::get_if<Dense>(&layers_[l]);
    if (!d) continue;
    const double bound = std::sqrt(6.0 / static_cast<double>(d->in + d->out));
    std::uniform_real_distribution<double> uni(-bound, bound);
    Matrix& w = params_[param_index_[l]];
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = uni(rng);
    params_[param_index_[l] + 1].setZero();
  }
  tape_.reset();
}

ForwardResult Network::forward(const Matrix& batch, bool training, Engine& rng) {
  if (!training) return run(batch, false, nullptr, nullptr);
  Tape tape;
  ForwardResult out = run(batch, true, &rng, &tape);
  tape_ = std::move(tape);
  return out;
}

ForwardResult Network::forward(const Matrix& batch) const { return run(batch, false, nullptr, nullptr); }

ForwardResult Network::run(const Matrix& batch, bool training, Engine* rng, Tape* tape) const {
  if (static_cast<std::size_t>(batch.cols()) != input_dim_)
    throw InputError("forward: batch width " + std::to_string(batch.cols()) +
                     " does not match network input " + std::to_string(input_dim_));
  ForwardResult result;
  Matrix h = batch;
  if (tape) {
    tape->inputs.reserve(layers_.size());
    tape->masks.assign(layers_.size(), std::nullopt);
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (tape) tape->inputs.push_back(h);
    if (l == last_dense_) result.penultimate = h;
    std::visit(overloaded{
                   [&](const Dense&) {
                     const Matrix& w = params_[param_index_[l]];
                     const Matrix& b = params_[param_index_[l] + 1];
                     Matrix next(h.rows(), w.cols());
                     next.noalias() = h * w;
                     next.rowwise() += b.row(0);
                     h = std::move(next);
                   },
                   [&](const Activation& a) { apply_activation(a, h); },
                   [&](const Dropout& d) {
                     if (!training || d.rate == 0.0) return;
                     std::bernoulli_distribution keep(1.0 - d.rate);
                     const double scale = 1.0 / (1.0 - d.rate);
                     Matrix mask(h.rows(), h.cols());
                     for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(*rng) ? scale : 0.0;
                     h = h.cwiseProduct(mask);
                     if (tape) tape->masks[l] = std::move(mask);
                   },
                   [&](const SoftmaxHead&) {
                     result.head_input = h;
                     h = softmax_rows(h);
                   },
                   [&](const GaussianHead&) { result.head_input = h; },
               },
               layers_[l]);
  }
  result.head_output = std::move(h);
  return result;
}

Gradients Network::backward(const Matrix& head_input_grad) const {
  if (!tape_) throw StateError("backward: no training forward pass recorded");
  const Matrix& head_in = tape_->inputs.back();
  if (head_input_grad.rows() != head_in.rows() || head_input_grad.cols() != head_in.cols())
    throw InputError("backward: upstream gradient " + shape_str(head_input_grad) +
                     " does not match head input " + shape_str(head_in));
  return backprop(layers_.size() - 1, head_input_grad);
}

Gradients Network::backward_from_penultimate(const Matrix& penultimate_grad) const {
  if (!tape_) throw StateError("backward: no training forward pass recorded");
  const Matrix& pen = tape_->inputs[last_dense_];
  if (penultimate_grad.rows() != pen.rows() || penultimate_grad.cols() != pen.cols())
    throw InputError("backward: penultimate gradient " + shape_str(penultimate_grad) +
                     " does not match activation " + shape_str(pen));
  return backprop(last_dense_, penultimate_grad);
}

// `grad` is the gradient with respect to the input of layer `start_layer`'s
// successor chain, i.e. the output of layer start_layer - 1.
Gradients Network::backprop(std::size_t start_layer, Matrix grad) const {
  Gradients g;
  g.params.reserve(params_.size());
  for (const auto& p : params_) g.params.emplace_back(Matrix::Zero(p.rows(), p.cols()));
  for (std::size_t l = start_layer; l-- > 0;) {
    const Matrix& input = tape_->inputs[l];
    std::visit(overloaded{
                   [&](const Dense&) {
                     const std::size_t pi = param_index_[l];
                     g.params[pi].noalias() = input.transpose() * grad;
                     g.params[pi + 1] = grad.colwise().sum();
                     Matrix next(grad.rows(), params_[pi].rows());
                     next.noalias() = grad * params_[pi].transpose();
                     grad = std::move(next);
                   },
                   [&](const Activation& a) { activation_backward(a, input, grad); },
                   [&](const Dropout&) {
                     if (tape_->masks[l]) grad = grad.cwiseProduct(*tape_->masks[l]);
                   },
                   [&](const SoftmaxHead&) {},
                   [&](const GaussianHead&) {},
               },
               layers_[l]);
  }
  g.input = std::move(grad);
  return g;
}

std::vector<LayerSpec> mlp(std::size_t input, const std::vector<std::size_t>& hidden, std::size_t output,
                           Activation activation, bool softmax, double dropout) {
  std::vector<LayerSpec> layers;
  std::size_t width = input;
  for (std::size_t h : hidden) {
    if (dropout > 0.0) layers.emplace_back(Dropout{dropout});
    layers.emplace_back(Dense{width, h});
    layers.emplace_back(activation);
    width = h;
  }
  layers.emplace_back(Dense{width, output});
  if (softmax)
    layers.emplace_back(SoftmaxHead{output});
  else
    layers.emplace_back(GaussianHead{output});
  return layers;
}

}  // namespace discoder::nn
