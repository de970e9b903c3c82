#pragma once

#include "discoder/tensor.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace discoder::check {

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t entries = 0;
  bool passed = false;
};

inline constexpr double kGradTolerance = 1e-4;

/// |a - n| / max(|a|, |n|, 1e-7).
double relative_error(double analytic, double numeric);

/// Central differences of `f` around `x` compared entry-wise with `grad`.
GradCheckResult check_gradient(std::string name, const std::function<double(const Matrix&)>& f, const Matrix& x,
                               const Matrix& grad, double step = 1e-6, double tolerance = kGradTolerance);

/// Every analytic gradient in the library against finite differences, on
/// small random instances drawn from `seed`.
std::vector<GradCheckResult> run_gradient_suite(std::uint64_t seed);

}  // namespace discoder::check
