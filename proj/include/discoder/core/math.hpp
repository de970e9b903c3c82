#pragma once

#include "discoder/tensor.hpp"

#include <span>

namespace discoder::core {

/// log(sum(exp(v))) via max-shift. Entries may be -inf (an all -inf input
/// yields -inf); an empty input or a NaN/+inf entry is rejected.
double log_sum_exp(std::span<const double> v);

/// Row-wise log-softmax computed in logit space.
Matrix log_softmax_rows(const Matrix& logits);

}  // namespace discoder::core
