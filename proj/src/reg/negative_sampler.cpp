#include "discoder/reg/negative_sampler.hpp"

#include "discoder/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace discoder::reg {

NegativeSampler::NegativeSampler(std::vector<double> word_probs, double mean_length)
    : word_probs_(std::move(word_probs)), mean_length_(mean_length) {
  if (word_probs_.empty()) throw InputError("negative sampler: empty vocabulary");
  double total = 0.0;
  for (double p : word_probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw InputError("negative sampler: word probabilities must be non-negative");
    total += p;
  }
  if (total <= 0.0) throw InputError("negative sampler: word probabilities are all zero");
  for (double& p : word_probs_) p /= total;
  if (!(mean_length > 0.0)) throw InputError("negative sampler: mean length must be positive");
}

NegativeSampler NegativeSampler::from_corpus(const data::SparseDataset& counts) {
  std::vector<double> freq(counts.vocab_size, 0.0);
  double tokens = 0.0;
  for (const auto& doc : counts.docs)
    for (const auto& e : doc) {
      freq[e.term] += e.weight;
      tokens += e.weight;
    }
  if (counts.docs.empty()) throw InputError("negative sampler: empty corpus");
  return NegativeSampler(std::move(freq), tokens / static_cast<double>(counts.docs.size()));
}

data::SparseDataset NegativeSampler::sample(std::size_t count, Engine& rng) const {
  if (count < 1) throw InputError("negative sampler: count must be at least 1");
  std::poisson_distribution<long> length(mean_length_);
  std::discrete_distribution<std::size_t> word(word_probs_.begin(), word_probs_.end());
  data::SparseDataset out;
  out.vocab_size = word_probs_.size();
  out.docs.reserve(count);
  for (std::size_t d = 0; d < count; ++d) {
    long len = 0;
    while (len < 1) len = length(rng);
    std::map<std::uint32_t, double> tf;
    for (long t = 0; t < len; ++t) tf[static_cast<std::uint32_t>(word(rng))] += 1.0;
    data::SparseRow row;
    row.reserve(tf.size());
    for (const auto& [term, c] : tf) row.push_back({term, c});
    out.docs.push_back(std::move(row));
  }
  return out;
}

}  // namespace discoder::reg
