#pragma once

#include "discoder/tensor.hpp"

#include <cstddef>
#include <deque>
#include <variant>
#include <vector>

namespace discoder::core {

struct CategoricalHead {
  std::size_t classes = 0;
};

struct GaussianHead {
  std::size_t dim = 0;
  double lambda = 1.0;  // fixed encoder variance
};

using EncodingHead = std::variant<CategoricalHead, GaussianHead>;

void validate(const EncodingHead& head);

/// Latent one-hot vector e_index in R^classes.
struct OneHot {
  std::size_t index = 0;
  std::size_t classes = 0;

  Vector to_vector() const;
  friend bool operator==(const OneHot&, const OneHot&) = default;
};

struct RealVec {
  Vector z;
};

using LatentAssignment = std::variant<OneHot, RealVec>;

/// Categorical prior p(z = e_k). Uniform by default.
class CategoricalPrior {
 public:
  static CategoricalPrior uniform(std::size_t classes);
  /// Arbitrary prior; probabilities must be positive and sum to 1.
  explicit CategoricalPrior(std::vector<double> probabilities);

  std::size_t classes() const noexcept { return log_probs_.size(); }
  double log_prob(std::size_t k) const { return log_probs_.at(k); }
  double prob(std::size_t k) const;
  const std::vector<double>& log_probs() const noexcept { return log_probs_; }

 private:
  CategoricalPrior() = default;
  std::vector<double> log_probs_;
};

/// Uniform distribution on the sphere of `radius` in R^dim.
class SpherePrior {
 public:
  SpherePrior(std::size_t dim, double radius);
  /// Default radius sqrt(dim).
  explicit SpherePrior(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  double radius() const noexcept { return radius_; }

  /// Log surface density; -inf off the sphere (relative tolerance 1e-9).
  double log_density(const Vector& z) const;
  /// Radial projection; a (near-)zero vector is nudged along the first axis first.
  Vector project(Vector v) const;
  bool contains(const Vector& z) const;

 private:
  std::size_t dim_;
  double radius_;
};

using Prior = std::variant<CategoricalPrior, SpherePrior>;

/// Encoder outputs p(z|x) for a batch of b samples over K classes, stored as
/// log-probabilities so zero entries stay representable as -inf.
class CategoricalEncodings {
 public:
  static CategoricalEncodings from_logits(const Matrix& logits, std::vector<std::size_t> sample_ids = {});
  /// Rows must be non-negative and sum to 1 within 1e-9.
  static CategoricalEncodings from_probabilities(const Matrix& probs, std::vector<std::size_t> sample_ids = {});

  std::size_t batch_size() const noexcept { return static_cast<std::size_t>(log_probs_.rows()); }
  std::size_t classes() const noexcept { return static_cast<std::size_t>(log_probs_.cols()); }
  const Matrix& log_probs() const noexcept { return log_probs_; }
  Matrix probabilities() const;
  const std::vector<std::size_t>& sample_ids() const noexcept { return sample_ids_; }

 private:
  CategoricalEncodings(Matrix log_probs, std::vector<std::size_t> ids);
  Matrix log_probs_;
  std::vector<std::size_t> sample_ids_;
};

/// FIFO of encoder means of recently trained samples.
class RecentQueue {
 public:
  explicit RecentQueue(std::size_t capacity = 1000);

  void push(const Vector& mean);
  void push_rows(const Matrix& means);
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  bool empty() const noexcept { return entries_.empty(); }
  /// Entries oldest first, one per row.
  Matrix as_matrix() const;
  const std::deque<Vector>& entries() const noexcept { return entries_; }

 private:
  std::size_t capacity_;
  std::deque<Vector> entries_;
};

}  // namespace discoder::core
