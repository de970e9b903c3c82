#include "discoder/eval/assign.hpp"

#include "discoder/errors.hpp"

#include <algorithm>

namespace discoder::eval {

ClusterAssignment assignment_from_posteriors(const Matrix& posteriors) {
  ClusterAssignment a;
  a.clusters = static_cast<std::size_t>(posteriors.cols());
  a.cluster.reserve(static_cast<std::size_t>(posteriors.rows()));
  for (Eigen::Index i = 0; i < posteriors.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < posteriors.cols(); ++k)
      if (posteriors(i, k) > posteriors(i, best)) best = k;
    a.cluster.push_back(static_cast<std::size_t>(best));
  }
  a.posteriors = posteriors;
  return a;
}

std::vector<std::size_t> assign_labels_max_intersection(const ClusterAssignment& clusters,
                                                        const data::Labels& true_labels) {
  if (clusters.cluster.size() != true_labels.size())
    throw InputError("assign_labels_max_intersection: cluster and label counts differ");
  const std::size_t classes =
      true_labels.empty() ? 0 : *std::max_element(true_labels.begin(), true_labels.end()) + 1;
  std::vector<std::vector<std::size_t>> overlap(clusters.clusters, std::vector<std::size_t>(classes, 0));
  for (std::size_t i = 0; i < true_labels.size(); ++i) {
    if (clusters.cluster[i] >= clusters.clusters) throw InputError("assign_labels_max_intersection: cluster index out of range");
    ++overlap[clusters.cluster[i]][true_labels[i]];
  }
  std::vector<std::size_t> mapping(clusters.clusters, kUnmapped);
  for (std::size_t k = 0; k < clusters.clusters; ++k) {
    std::size_t best_count = 0;
    for (std::size_t c = 0; c < classes; ++c)
      if (overlap[k][c] > best_count) {
        best_count = overlap[k][c];
        mapping[k] = c;
      }
  }
  return mapping;
}

std::vector<std::size_t> assign_labels_max_confidence(const Matrix& posteriors, const data::Labels& true_labels) {
  if (static_cast<std::size_t>(posteriors.rows()) != true_labels.size())
    throw InputError("assign_labels_max_confidence: posterior and label counts differ");
  std::vector<std::size_t> mapping(static_cast<std::size_t>(posteriors.cols()), kUnmapped);
  for (Eigen::Index k = 0; k < posteriors.cols(); ++k) {
    double best = 0.0;
    for (Eigen::Index i = 0; i < posteriors.rows(); ++i)
      if (posteriors(i, k) > best) {
        best = posteriors(i, k);
        mapping[static_cast<std::size_t>(k)] = true_labels[static_cast<std::size_t>(i)];
      }
  }
  return mapping;
}

data::Labels apply_mapping(const ClusterAssignment& clusters, const std::vector<std::size_t>& mapping) {
  if (mapping.size() != clusters.clusters) throw InputError("apply_mapping: mapping size differs from cluster count");
  data::Labels out;
  out.reserve(clusters.cluster.size());
  for (std::size_t c : clusters.cluster) out.push_back(mapping.at(c));
  return out;
}

double clustering_error(const data::Labels& mapped, const data::Labels& truth) {
  if (mapped.size() != truth.size()) throw InputError("clustering_error: length mismatch");
  if (truth.empty()) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) wrong += mapped[i] != truth[i];
  return 100.0 * static_cast<double>(wrong) / static_cast<double>(truth.size());
}

double clustering_accuracy(const data::Labels& mapped, const data::Labels& truth) {
  return 100.0 - clustering_error(mapped, truth);
}

double error_max_intersection(const Matrix& posteriors, const data::Labels& truth) {
  const auto a = assignment_from_posteriors(posteriors);
  return clustering_error(apply_mapping(a, assign_labels_max_intersection(a, truth)), truth);
}

double error_max_confidence(const Matrix& posteriors, const data::Labels& truth) {
  const auto a = assignment_from_posteriors(posteriors);
  return clustering_error(apply_mapping(a, assign_labels_max_confidence(posteriors, truth)), truth);
}

}  // namespace discoder::eval
