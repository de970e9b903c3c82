#pragma once

#include "discoder/data/dataset.hpp"

#include <cstdint>
#include <vector>

namespace discoder::data {

struct SemiSupervisedSplit {
  std::vector<std::vector<std::size_t>> labeled_ids;  // per class, ascending
  std::vector<std::size_t> unlabeled_ids;             // ascending

  std::size_t labeled_count() const;
  /// Labeled ids concatenated class by class.
  std::vector<std::size_t> flat_labeled() const;
};

/// Draws `per_class` labeled samples per class uniformly without replacement.
SemiSupervisedSplit split_semi_supervised(const Labels& labels, std::size_t per_class, std::uint64_t seed);

}  // namespace discoder::data
