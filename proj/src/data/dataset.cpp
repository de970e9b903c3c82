#include "discoder/data/dataset.hpp"

#include "discoder/errors.hpp"

#include <algorithm>
#include <cmath>

namespace discoder::data {

std::string to_string(Normalization n) {
  switch (n) {
    case Normalization::none: return "none";
    case Normalization::unit: return "unit";
    case Normalization::symmetric: return "symmetric";
  }
  return "?";
}

Normalization parse_normalization(const std::string& name) {
  if (name == "none") return Normalization::none;
  if (name == "unit") return Normalization::unit;
  if (name == "symmetric") return Normalization::symmetric;
  throw InputError("unknown normalization '" + name + "'");
}

void DenseDataset::validate() const {
  if (labels && labels->size() != size())
    throw InputError("dataset: " + std::to_string(labels->size()) + " labels for " + std::to_string(size()) +
                     " samples");
  if (!features.allFinite()) throw InputError("dataset: non-finite feature value");
  if (normalization == Normalization::unit && size() > 0 &&
      (features.minCoeff() < 0.0 || features.maxCoeff() > 1.0))
    throw InputError("dataset: unit-normalized features outside [0,1]");
  if (normalization == Normalization::symmetric && size() > 0 &&
      (features.minCoeff() < -1.0 || features.maxCoeff() > 1.0))
    throw InputError("dataset: symmetric-normalized features outside [-1,1]");
}

std::size_t DenseDataset::num_classes() const {
  if (!labels || labels->empty()) return 0;
  return *std::max_element(labels->begin(), labels->end()) + 1;
}

DenseDataset to_symmetric(DenseDataset ds) {
  if (ds.normalization != Normalization::unit) throw InputError("to_symmetric: dataset is not unit-normalized");
  ds.features = (ds.features.array() * 2.0 - 1.0).matrix();
  ds.normalization = Normalization::symmetric;
  return ds;
}

void SparseDataset::validate() const {
  if (labels && labels->size() != docs.size()) throw InputError("sparse dataset: label count mismatch");
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (std::size_t e = 0; e < docs[d].size(); ++e) {
      const auto& entry = docs[d][e];
      if (entry.term >= vocab_size)
        throw InputError("sparse dataset: doc " + std::to_string(d) + " term " + std::to_string(entry.term) +
                         " >= vocabulary size " + std::to_string(vocab_size));
      if (!std::isfinite(entry.weight) || entry.weight < 0.0)
        throw InputError("sparse dataset: doc " + std::to_string(d) + " has a negative or non-finite weight");
      if (e > 0 && docs[d][e - 1].term >= entry.term)
        throw InputError("sparse dataset: doc " + std::to_string(d) + " terms not strictly increasing");
    }
  }
}

Matrix SparseDataset::to_dense() const {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(docs.size()), static_cast<Eigen::Index>(vocab_size));
  for (std::size_t d = 0; d < docs.size(); ++d)
    for (const auto& e : docs[d]) m(static_cast<Eigen::Index>(d), e.term) = e.weight;
  return m;
}

std::size_t SparseDataset::num_classes() const {
  if (!labels || labels->empty()) return 0;
  return *std::max_element(labels->begin(), labels->end()) + 1;
}

DenseDataset subset(const DenseDataset& ds, const std::vector<std::size_t>& ids) {
  DenseDataset out;
  out.normalization = ds.normalization;
  out.features.resize(static_cast<Eigen::Index>(ids.size()), ds.features.cols());
  if (ds.labels) out.labels.emplace();
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= ds.size()) throw InputError("subset: index out of range");
    out.features.row(static_cast<Eigen::Index>(r)) = ds.features.row(static_cast<Eigen::Index>(ids[r]));
    if (ds.labels) out.labels->push_back((*ds.labels)[ids[r]]);
  }
  return out;
}

}  // namespace discoder::data
