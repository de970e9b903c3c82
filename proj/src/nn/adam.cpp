#include "discoder/nn/adam.hpp"

#include "discoder/errors.hpp"

#include <cmath>
#include <string>

namespace discoder::nn {

AdamState::AdamState(AdamConfig cfg, const std::vector<Matrix>& params) : config(cfg) {
  if (!(cfg.learning_rate > 0.0)) throw InputError("adam: learning rate must be positive");
  if (!(cfg.beta1 > 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 > 0.0 && cfg.beta2 < 1.0))
    throw InputError("adam: betas must lie in (0,1)");
  m.reserve(params.size());
  v.reserve(params.size());
  for (const auto& p : params) {
    m.emplace_back(Matrix::Zero(p.rows(), p.cols()));
    v.emplace_back(Matrix::Zero(p.rows(), p.cols()));
  }
}

void adam_step(std::vector<Matrix>& params, const std::vector<Matrix>& grads, AdamState& state,
               double lr_scale) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw InputError("adam: parameter/gradient/state counts differ");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].rows() != grads[i].rows() || params[i].cols() != grads[i].cols() ||
        params[i].rows() != state.m[i].rows() || params[i].cols() != state.m[i].cols())
      throw InputError("adam: shape mismatch at parameter " + std::to_string(i));
    if (!grads[i].allFinite()) {
      Eigen::Index bad = 0;
      while (std::isfinite(grads[i].data()[bad])) ++bad;
      throw NumericalError("adam: non-finite gradient at parameter " + std::to_string(i) + " element " +
                           std::to_string(bad) + " (value " + std::to_string(grads[i].data()[bad]) +
                           ", step " + std::to_string(state.step + 1) + ")");
    }
  }
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  const double lr = c.learning_rate * lr_scale;
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * grads[i];
    state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * grads[i].cwiseProduct(grads[i]);
    params[i].array() -=
        lr * (state.m[i].array() / bc1) / ((state.v[i].array() / bc2).sqrt() + c.epsilon);
  }
}

}  // namespace discoder::nn
