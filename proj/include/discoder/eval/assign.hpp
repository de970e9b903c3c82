#pragma once

#include "discoder/data/dataset.hpp"
#include "discoder/tensor.hpp"

#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

namespace discoder::eval {

/// Label given to clusters that cannot be mapped (no members, or no
/// posterior mass). Samples carrying it always count as errors.
inline constexpr std::size_t kUnmapped = std::numeric_limits<std::size_t>::max();

struct ClusterAssignment {
  std::vector<std::size_t> cluster;  // per sample, in [0, clusters)
  std::size_t clusters = 0;
  std::optional<Matrix> posteriors;  // n x clusters
};

/// Hard assignment argmax_k p(z=k|x), ties to the lowest index.
ClusterAssignment assignment_from_posteriors(const Matrix& posteriors);

/// Each cluster takes the true class it overlaps most (ties to the lowest class).
std::vector<std::size_t> assign_labels_max_intersection(const ClusterAssignment& clusters,
                                                        const data::Labels& true_labels);

/// Each cluster k takes the true label of the sample maximizing p(z=k|x).
std::vector<std::size_t> assign_labels_max_confidence(const Matrix& posteriors, const data::Labels& true_labels);

/// Per-sample predicted labels under a cluster-to-label map.
data::Labels apply_mapping(const ClusterAssignment& clusters, const std::vector<std::size_t>& mapping);

/// Percentage of mismatches.
double clustering_error(const data::Labels& mapped, const data::Labels& truth);
/// 100 - clustering_error.
double clustering_accuracy(const data::Labels& mapped, const data::Labels& truth);

/// Error of argmax-assigned clusters under the max-intersection scheme.
double error_max_intersection(const Matrix& posteriors, const data::Labels& truth);
/// Error of argmax-assigned clusters under the max-confidence scheme.
double error_max_confidence(const Matrix& posteriors, const data::Labels& truth);

}  // namespace discoder::eval
