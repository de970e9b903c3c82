#include "discoder/eval/kmeans.hpp"

#include "discoder/errors.hpp"
#include "discoder/rng.hpp"

#include <limits>
#include <random>

namespace discoder::eval {
namespace {

struct Run {
  std::vector<std::size_t> assign;
  Matrix centers;
  std::vector<double> history;
  double inertia = std::numeric_limits<double>::infinity();
};

// Assigns every row to its nearest center; returns the inertia.
double assign_step(const Matrix& x, const Matrix& centers, std::vector<std::size_t>& assign) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (Eigen::Index k = 0; k < centers.rows(); ++k) {
      const double d = (x.row(i) - centers.row(k)).squaredNorm();
      if (d < best) {
        best = d;
        arg = static_cast<std::size_t>(k);
      }
    }
    assign[static_cast<std::size_t>(i)] = arg;
    total += best;
  }
  return total;
}

Matrix plus_plus_seeds(const Matrix& x, std::size_t k, Engine& rng) {
  const auto n = static_cast<std::size_t>(x.rows());
  Matrix centers(static_cast<Eigen::Index>(k), x.cols());
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  centers.row(0) = x.row(static_cast<Eigen::Index>(first(rng)));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = (x.row(static_cast<Eigen::Index>(i)) - centers.row(0)).squaredNorm();
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = 0;
    if (total > 0.0) {
      std::discrete_distribution<std::size_t> dist(d2.begin(), d2.end());
      pick = dist(rng);
    } else {
      pick = first(rng);
    }
    centers.row(static_cast<Eigen::Index>(c)) = x.row(static_cast<Eigen::Index>(pick));
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], (x.row(static_cast<Eigen::Index>(i)) - centers.row(static_cast<Eigen::Index>(c))).squaredNorm());
  }
  return centers;
}

}  // namespace

KMeansResult kmeans_baseline(const Matrix& features, std::size_t clusters, std::size_t restarts, std::uint64_t seed,
                             std::size_t max_iterations) {
  const auto n = static_cast<std::size_t>(features.rows());
  if (clusters < 1 || clusters > n) throw InputError("kmeans: need 1 <= K <= n");
  if (restarts < 1) throw InputError("kmeans: restarts must be at least 1");

  KMeansResult result;
  Run best;
  for (std::size_t r = 0; r < restarts; ++r) {
    Engine rng = make_stream(seed, "kmeans", r);
    Run run;
    run.centers = plus_plus_seeds(features, clusters, rng);
    run.assign.assign(n, 0);
    double inertia = assign_step(features, run.centers, run.assign);
    run.history.push_back(inertia);
    for (std::size_t it = 0; it < max_iterations; ++it) {
      // update step; an empty cluster keeps its previous center
      Matrix sums = Matrix::Zero(run.centers.rows(), run.centers.cols());
      std::vector<double> counts(clusters, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        sums.row(static_cast<Eigen::Index>(run.assign[i])) += features.row(static_cast<Eigen::Index>(i));
        counts[run.assign[i]] += 1.0;
      }
      for (std::size_t k = 0; k < clusters; ++k)
        if (counts[k] > 0.0) run.centers.row(static_cast<Eigen::Index>(k)) = sums.row(static_cast<Eigen::Index>(k)) / counts[k];
      auto previous = run.assign;
      inertia = assign_step(features, run.centers, run.assign);
      run.history.push_back(inertia);
      if (run.assign == previous) break;
    }
    run.inertia = inertia;
    result.restart_inertia.push_back(inertia);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  result.assignment.cluster = std::move(best.assign);
  result.assignment.clusters = clusters;
  result.centers = std::move(best.centers);
  result.inertia = best.inertia;
  result.inertia_history = std::move(best.history);
  return result;
}

}  // namespace discoder::eval
