#include "discoder/data/tfidf.hpp"

#include "discoder/errors.hpp"

#include <cmath>

namespace discoder::data {

TfIdfModel TfIdfModel::fit(const SparseDataset& counts) {
  counts.validate();
  std::vector<double> df(counts.vocab_size, 0.0);
  for (const auto& doc : counts.docs)
    for (const auto& e : doc)
      if (e.weight > 0.0) df[e.term] += 1.0;
  const double n = static_cast<double>(counts.size());
  TfIdfModel m;
  m.idf_.resize(counts.vocab_size);
  for (std::size_t t = 0; t < df.size(); ++t) m.idf_[t] = 1.0 + std::log((1.0 + n) / (1.0 + df[t]));
  return m;
}

SparseDataset TfIdfModel::transform(const SparseDataset& counts, std::vector<std::size_t>* empty_docs) const {
  if (counts.vocab_size != idf_.size()) throw InputError("tf_idf: vocabulary size differs from the fitted model");
  SparseDataset out;
  out.vocab_size = counts.vocab_size;
  out.labels = counts.labels;
  out.docs.reserve(counts.size());
  for (std::size_t d = 0; d < counts.size(); ++d) {
    SparseRow row;
    double norm2 = 0.0;
    for (const auto& e : counts.docs[d]) {
      if (e.weight == 0.0) continue;
      const double w = e.weight * idf_[e.term];
      row.push_back({e.term, w});
      norm2 += w * w;
    }
    if (norm2 > 0.0) {
      const double inv = 1.0 / std::sqrt(norm2);
      for (auto& e : row) e.weight *= inv;
    } else if (empty_docs) {
      empty_docs->push_back(d);
    }
    out.docs.push_back(std::move(row));
  }
  return out;
}

TfIdfResult tf_idf(const SparseDataset& counts) {
  TfIdfResult r;
  r.model = TfIdfModel::fit(counts);
  r.data = r.model.transform(counts, &r.empty_docs);
  return r;
}

}  // namespace discoder::data
