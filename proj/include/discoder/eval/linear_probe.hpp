#pragma once

#include "discoder/data/dataset.hpp"
#include "discoder/tensor.hpp"

#include <cstdint>
#include <vector>

namespace discoder::eval {

struct ProbeOptions {
  std::size_t epochs = 100;
  double learning_rate = 1e-3;
  std::size_t batch_size = 100;
  std::uint64_t seed = 0;
  bool standardize = true;  // z-score features with train-split statistics
};

struct ProbeResult {
  double train_accuracy = 0.0;  // percent
  double test_accuracy = 0.0;   // percent
};

/// Trains a single softmax layer on frozen embeddings with Adam and reports
/// accuracy on the held-out ids.
ProbeResult linear_probe(const Matrix& embeddings, const data::Labels& labels, const std::vector<std::size_t>& train_ids,
                         const std::vector<std::size_t>& test_ids, const ProbeOptions& options = {});

}  // namespace discoder::eval
