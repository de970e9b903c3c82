#pragma once

#include "discoder/data/dataset.hpp"

#include <vector>

namespace discoder::data {

/// Smooth-idf tf-idf: weight = tf * (1 + ln((1+n)/(1+df))), then each
/// non-empty row is scaled to unit L2 norm.
class TfIdfModel {
 public:
  static TfIdfModel fit(const SparseDataset& counts);

  const std::vector<double>& idf() const noexcept { return idf_; }

  /// Applies the fitted idf to any count matrix over the same vocabulary.
  /// Indices of empty documents (zero rows) are appended to `empty_docs`.
  SparseDataset transform(const SparseDataset& counts, std::vector<std::size_t>* empty_docs = nullptr) const;

 private:
  std::vector<double> idf_;
};

struct TfIdfResult {
  SparseDataset data;
  TfIdfModel model;
  std::vector<std::size_t> empty_docs;  // warning list
};

TfIdfResult tf_idf(const SparseDataset& counts);

}  // namespace discoder::data
