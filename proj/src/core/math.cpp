#include "discoder/core/math.hpp"

#include "discoder/errors.hpp"

#include <cmath>
#include <limits>

namespace discoder::core {

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) throw InputError("log_sum_exp: empty input");
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) {
    if (std::isnan(x) || x == std::numeric_limits<double>::infinity())
      throw InputError("log_sum_exp: entries must be finite or -inf");
    if (x > mx) mx = x;
  }
  if (mx == -std::numeric_limits<double>::infinity()) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

Matrix log_softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r);
    const double lse = log_sum_exp(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
    out.row(r) = row.array() - lse;
  }
  return out;
}

}  // namespace discoder::core
