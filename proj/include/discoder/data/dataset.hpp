#pragma once

#include "discoder/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace discoder::data {

enum class Normalization { none, unit, symmetric };

std::string to_string(Normalization n);
Normalization parse_normalization(const std::string& name);

using Labels = std::vector<std::size_t>;

struct DenseDataset {
  Matrix features;  // n x d
  std::optional<Labels> labels;
  Normalization normalization = Normalization::none;

  std::size_t size() const noexcept { return static_cast<std::size_t>(features.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(features.cols()); }
  /// Throws InputError when an invariant is violated.
  void validate() const;
  std::size_t num_classes() const;  // 1 + max label; 0 without labels
};

/// Maps [0,1] features to [-1,1].
DenseDataset to_symmetric(DenseDataset ds);

struct SparseEntry {
  std::uint32_t term = 0;
  double weight = 0.0;
};

using SparseRow = std::vector<SparseEntry>;  // sorted by term, unique terms

struct SparseDataset {
  std::vector<SparseRow> docs;
  std::size_t vocab_size = 0;
  std::optional<Labels> labels;

  std::size_t size() const noexcept { return docs.size(); }
  void validate() const;
  Matrix to_dense() const;
  std::size_t num_classes() const;
};

/// Returns rows[ids] (features and labels).
DenseDataset subset(const DenseDataset& ds, const std::vector<std::size_t>& ids);

}  // namespace discoder::data
