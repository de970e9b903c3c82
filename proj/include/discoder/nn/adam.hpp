#pragma once

#include "discoder/tensor.hpp"

#include <cstdint>
#include <vector>

namespace discoder::nn {

struct AdamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam moments for one parameter list.
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;

  AdamState() = default;
  AdamState(AdamConfig cfg, const std::vector<Matrix>& params);
};

/// One Adam update. Throws NumericalError naming the first non-finite
/// gradient entry; parameters and state are untouched in that case.
void adam_step(std::vector<Matrix>& params, const std::vector<Matrix>& grads, AdamState& state,
               double lr_scale = 1.0);

}  // namespace discoder::nn
