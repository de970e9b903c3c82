#pragma once

#include "discoder/eval/assign.hpp"

#include <cstdint>
#include <vector>

namespace discoder::eval {

struct KMeansResult {
  ClusterAssignment assignment;
  Matrix centers;
  double inertia = 0.0;
  std::vector<double> inertia_history;  // per Lloyd iteration of the returned restart
  std::vector<double> restart_inertia;  // final inertia of every restart
};

/// Lloyd's algorithm from k-means++ seeds; returns the lowest-inertia restart.
KMeansResult kmeans_baseline(const Matrix& features, std::size_t clusters, std::size_t restarts, std::uint64_t seed,
                             std::size_t max_iterations = 300);

}  // namespace discoder::eval
