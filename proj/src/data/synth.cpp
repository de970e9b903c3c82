#include "discoder/data/synth.hpp"

#include "discoder/errors.hpp"
#include "discoder/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <random>

namespace discoder::data {

Matrix gmm_means(std::size_t clusters, std::size_t dim, double separation) {
  if (clusters < 1 || dim < 1) throw InputError("synth_gmm: clusters and dim must be at least 1");
  Matrix means = Matrix::Zero(static_cast<Eigen::Index>(clusters), static_cast<Eigen::Index>(dim));
  for (std::size_t k = 0; k < clusters; ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    if (dim == 1) {
      const double pos = clusters == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(clusters - 1);
      means(r, 0) = separation * pos;
    } else if (clusters <= dim && clusters > 2) {
      means(r, r) = separation;
    } else {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(clusters);
      means(r, 0) = separation * std::cos(angle);
      means(r, 1) = separation * std::sin(angle);
    }
  }
  return means;
}

DenseDataset synth_gmm(std::size_t clusters, std::size_t dim, std::size_t n_per_cluster, double separation,
                       double cluster_std, std::uint64_t seed) {
  if (n_per_cluster < 1) throw InputError("synth_gmm: n_per_cluster must be at least 1");
  if (!(separation >= 0.0) || !(cluster_std > 0.0))
    throw InputError("synth_gmm: separation must be non-negative and cluster_std positive");
  const Matrix means = gmm_means(clusters, dim, separation);
  Engine rng = make_stream(seed, "synth_gmm");
  std::normal_distribution<double> normal(0.0, cluster_std);
  DenseDataset ds;
  ds.features.resize(static_cast<Eigen::Index>(clusters * n_per_cluster), static_cast<Eigen::Index>(dim));
  ds.labels.emplace();
  Eigen::Index row = 0;
  for (std::size_t k = 0; k < clusters; ++k)
    for (std::size_t i = 0; i < n_per_cluster; ++i, ++row) {
      for (std::size_t j = 0; j < dim; ++j)
        ds.features(row, static_cast<Eigen::Index>(j)) = means(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) + normal(rng);
      ds.labels->push_back(k);
    }
  return ds;
}

namespace {

// Zipf weights over a random subset of `support` words.
std::vector<double> random_topic(std::size_t vocab, std::size_t support, double exponent, Engine& rng) {
  std::vector<std::size_t> words(vocab);
  std::iota(words.begin(), words.end(), 0);
  std::shuffle(words.begin(), words.end(), rng);
  std::vector<double> w(vocab, 0.0);
  for (std::size_t r = 0; r < std::min(support, vocab); ++r)
    w[words[r]] = 1.0 / std::pow(static_cast<double>(r + 1), exponent);
  return w;
}

}  // namespace

SparseDataset synth_topic_corpus(const TopicCorpusSpec& s) {
  if (s.classes < 1 || s.vocab_size < 1 || s.docs_per_class < 1 || s.topic_words < 1)
    throw InputError("synth_topic_corpus: sizes must be positive");
  if (!(s.mean_length > 0.0)) throw InputError("synth_topic_corpus: mean_length must be positive");
  if (s.class_share < 0.0 || s.nuisance_share < 0.0 || s.class_share + s.nuisance_share > 1.0)
    throw InputError("synth_topic_corpus: topic shares must be non-negative and sum to at most 1");

  Engine rng = make_stream(s.seed, "synth_topics");
  const auto background = random_topic(s.vocab_size, s.vocab_size, s.zipf_exponent, rng);
  std::vector<std::discrete_distribution<std::size_t>> class_topics, nuisance;
  for (std::size_t c = 0; c < s.classes; ++c) {
    auto w = random_topic(s.vocab_size, s.topic_words, s.zipf_exponent, rng);
    class_topics.emplace_back(w.begin(), w.end());
  }
  for (std::size_t u = 0; u < std::max<std::size_t>(s.nuisance_topics, 1); ++u) {
    auto w = random_topic(s.vocab_size, s.topic_words, s.zipf_exponent, rng);
    nuisance.emplace_back(w.begin(), w.end());
  }
  std::discrete_distribution<std::size_t> bg(background.begin(), background.end());
  std::uniform_int_distribution<std::size_t> pick_nuisance(0, nuisance.size() - 1);
  std::poisson_distribution<long> length(s.mean_length);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  SparseDataset ds;
  ds.vocab_size = s.vocab_size;
  ds.labels.emplace();
  for (std::size_t c = 0; c < s.classes; ++c) {
    for (std::size_t i = 0; i < s.docs_per_class; ++i) {
      const std::size_t u = pick_nuisance(rng);
      long len = 0;
      while (len < 1) len = length(rng);
      std::map<std::uint32_t, double> tf;
      for (long t = 0; t < len; ++t) {
        const double r = uni(rng);
        std::size_t w;
        if (r < s.class_share)
          w = class_topics[c](rng);
        else if (r < s.class_share + s.nuisance_share && s.nuisance_topics > 0)
          w = nuisance[u](rng);
        else
          w = bg(rng);
        tf[static_cast<std::uint32_t>(w)] += 1.0;
      }
      SparseRow row;
      for (const auto& [t, v] : tf) row.push_back({t, v});
      ds.docs.push_back(std::move(row));
      ds.labels->push_back(c);
    }
  }
  return ds;
}

}  // namespace discoder::data
