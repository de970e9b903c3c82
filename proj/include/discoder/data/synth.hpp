#pragma once

#include "discoder/data/dataset.hpp"

#include <cstdint>

namespace discoder::data {

/// Isotropic Gaussian clusters with labels, deterministic per seed.
///
/// Means sit at `separation` times a unit direction: angles 2*pi*k/K in the
/// first two coordinates when dim >= 2 and K > dim, the axes e_k when
/// K <= dim, and evenly spaced points on the line (+-1 for K = 2) when dim = 1.
DenseDataset synth_gmm(std::size_t clusters, std::size_t dim, std::size_t n_per_cluster, double separation,
                       double cluster_std, std::uint64_t seed);

/// Cluster centers used by synth_gmm.
Matrix gmm_means(std::size_t clusters, std::size_t dim, double separation);

/// Bag-of-words corpus with a class topic per document, a nuisance topic
/// shared across classes, and a Zipfian background vocabulary.
struct TopicCorpusSpec {
  std::size_t classes = 4;
  std::size_t vocab_size = 1000;
  std::size_t docs_per_class = 500;
  double mean_length = 60.0;
  std::size_t topic_words = 60;     // support size of each topic
  double class_share = 0.25;        // expected fraction of tokens from the class topic
  std::size_t nuisance_topics = 6;  // topics drawn independently of the class
  double nuisance_share = 0.25;
  double zipf_exponent = 1.05;
  std::uint64_t seed = 0;
};

/// Raw term counts with labels; documents are ordered by class.
SparseDataset synth_topic_corpus(const TopicCorpusSpec& spec);

}  // namespace discoder::data
