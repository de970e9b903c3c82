#pragma once

#include "discoder/data/dataset.hpp"
#include "discoder/rng.hpp"

#include <vector>

namespace discoder::reg {

/// Fake documents drawn from corpus word frequencies with Poisson lengths.
class NegativeSampler {
 public:
  /// `word_probs` is renormalized; an all-zero vector is rejected.
  NegativeSampler(std::vector<double> word_probs, double mean_length);

  /// Word frequencies and mean document length of a raw count corpus.
  static NegativeSampler from_corpus(const data::SparseDataset& counts);

  const std::vector<double>& word_probs() const noexcept { return word_probs_; }
  double mean_length() const noexcept { return mean_length_; }

  /// `count` documents of raw term counts. Lengths are Poisson(mean_length)
  /// redrawn until >= 1; words are i.i.d. from word_probs.
  data::SparseDataset sample(std::size_t count, Engine& rng) const;

 private:
  std::vector<double> word_probs_;
  double mean_length_;
};

}  // namespace discoder::reg
