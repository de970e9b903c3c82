#include "discoder/core/latent.hpp"

#include "discoder/core/math.hpp"
#include "discoder/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace discoder::core {

void validate(const EncodingHead& head) {
  if (const auto* c = std::get_if<CategoricalHead>(&head)) {
    if (c->classes < 1) throw InputError("categorical head: K must be at least 1");
  } else {
    const auto& g = std::get<GaussianHead>(head);
    if (g.dim < 1) throw InputError("gaussian head: m must be at least 1");
    if (!(g.lambda > 0.0)) throw InputError("gaussian head: lambda must be positive");
  }
}

Vector OneHot::to_vector() const {
  Vector v = Vector::Zero(static_cast<Eigen::Index>(classes));
  v(static_cast<Eigen::Index>(index)) = 1.0;
  return v;
}

CategoricalPrior CategoricalPrior::uniform(std::size_t classes) {
  if (classes == 0) throw InputError("categorical prior: K must be at least 1");
  CategoricalPrior p;
  p.log_probs_.assign(classes, -std::log(static_cast<double>(classes)));
  return p;
}

CategoricalPrior::CategoricalPrior(std::vector<double> probabilities) {
  if (probabilities.empty()) throw InputError("categorical prior: K must be at least 1");
  double total = 0.0;
  for (double p : probabilities) {
    if (!(p > 0.0)) throw InputError("categorical prior: probabilities must be positive");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InputError("categorical prior: probabilities must sum to 1");
  for (double p : probabilities) log_probs_.push_back(std::log(p));
}

double CategoricalPrior::prob(std::size_t k) const { return std::exp(log_prob(k)); }

SpherePrior::SpherePrior(std::size_t dim, double radius) : dim_(dim), radius_(radius) {
  if (dim == 0) throw InputError("sphere prior: m must be at least 1");
  if (!(radius > 0.0)) throw InputError("sphere prior: radius must be positive");
}

SpherePrior::SpherePrior(std::size_t dim) : SpherePrior(dim, std::sqrt(static_cast<double>(dim))) {}

bool SpherePrior::contains(const Vector& z) const {
  return static_cast<std::size_t>(z.size()) == dim_ && std::abs(z.norm() - radius_) <= 1e-9 * radius_;
}

double SpherePrior::log_density(const Vector& z) const {
  if (!contains(z)) return -std::numeric_limits<double>::infinity();
  // surface area of the radius-r sphere in R^m: 2 pi^(m/2) r^(m-1) / Gamma(m/2)
  const double m = static_cast<double>(dim_);
  const double log_area =
      std::log(2.0) + 0.5 * m * std::log(std::numbers::pi) + (m - 1.0) * std::log(radius_) - std::lgamma(0.5 * m);
  return -log_area;
}

Vector SpherePrior::project(Vector v) const {
  if (static_cast<std::size_t>(v.size()) != dim_) throw InputError("sphere projection: dimension mismatch");
  if (v.norm() < 1e-12) v(0) += 1e-6;
  return v * (radius_ / v.norm());
}

CategoricalEncodings::CategoricalEncodings(Matrix log_probs, std::vector<std::size_t> ids)
    : log_probs_(std::move(log_probs)), sample_ids_(std::move(ids)) {
  if (sample_ids_.empty()) {
    sample_ids_.resize(static_cast<std::size_t>(log_probs_.rows()));
    for (std::size_t i = 0; i < sample_ids_.size(); ++i) sample_ids_[i] = i;
  }
  if (sample_ids_.size() != static_cast<std::size_t>(log_probs_.rows()))
    throw InputError("encodings: sample id count does not match batch size");
}

CategoricalEncodings CategoricalEncodings::from_logits(const Matrix& logits, std::vector<std::size_t> ids) {
  if (logits.cols() == 0) throw InputError("encodings: K must be at least 1");
  if (!logits.allFinite()) throw InputError("encodings: logits must be finite");
  return CategoricalEncodings(log_softmax_rows(logits), std::move(ids));
}

CategoricalEncodings CategoricalEncodings::from_probabilities(const Matrix& probs, std::vector<std::size_t> ids) {
  if (probs.cols() == 0) throw InputError("encodings: K must be at least 1");
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    if ((probs.row(r).array() < 0.0).any() || !probs.row(r).allFinite())
      throw InputError("encodings: row " + std::to_string(r) + " has a negative or non-finite entry");
    if (std::abs(probs.row(r).sum() - 1.0) > 1e-9)
      throw InputError("encodings: row " + std::to_string(r) + " does not sum to 1");
  }
  Matrix logp = probs.unaryExpr([](double p) {
    return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
  });
  return CategoricalEncodings(std::move(logp), std::move(ids));
}

Matrix CategoricalEncodings::probabilities() const { return log_probs_.array().exp().matrix(); }

RecentQueue::RecentQueue(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw InputError("recent queue: capacity must be positive");
}

void RecentQueue::push(const Vector& mean) {
  if (!entries_.empty() && entries_.front().size() != mean.size())
    throw InputError("recent queue: dimension mismatch");
  entries_.push_back(mean);
  while (entries_.size() > capacity_) entries_.pop_front();
}

void RecentQueue::push_rows(const Matrix& means) {
  for (Eigen::Index r = 0; r < means.rows(); ++r) push(means.row(r).transpose());
}

Matrix RecentQueue::as_matrix() const {
  if (entries_.empty()) return Matrix(0, 0);
  Matrix m(static_cast<Eigen::Index>(entries_.size()), entries_.front().size());
  for (std::size_t i = 0; i < entries_.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = entries_[i].transpose();
  return m;
}

}  // namespace discoder::core
