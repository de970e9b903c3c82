#include "discoder/core/objectives.hpp"

#include "discoder/core/math.hpp"
#include "discoder/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace discoder::core {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double column_lse(const Matrix& m, Eigen::Index k) {
  // column of a row-major matrix is strided; copy it out
  std::vector<double> col(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index j = 0; j < m.rows(); ++j) col[static_cast<std::size_t>(j)] = m(j, k);
  return log_sum_exp(col);
}

double sq_dist(const Vector& a, const Vector& b) { return (a - b).squaredNorm(); }

}  // namespace

Vector column_log_sums(const Matrix& log_scores) {
  if (log_scores.rows() == 0) throw InputError("column_log_sums: empty batch");
  Vector out(log_scores.cols());
  for (Eigen::Index k = 0; k < log_scores.cols(); ++k) out(k) = column_lse(log_scores, k);
  return out;
}

double log_q_joint(const CategoricalEncodings& phi, std::size_t i, const OneHot& z, const CategoricalPrior& prior) {
  if (i >= phi.batch_size()) throw InputError("log_q_joint: sample index out of range");
  if (z.index >= phi.classes() || prior.classes() != phi.classes())
    throw InputError("log_q_joint: latent class incompatible with encodings");
  const auto k = static_cast<Eigen::Index>(z.index);
  const double logp = phi.log_probs()(static_cast<Eigen::Index>(i), k);
  if (logp == kNegInf) return kNegInf;
  return logp + prior.log_prob(z.index) - column_lse(phi.log_probs(), k);
}

double log_q_joint(const Matrix& means, std::size_t i, const RealVec& z, double lambda, const SpherePrior& prior) {
  if (i >= static_cast<std::size_t>(means.rows())) throw InputError("log_q_joint: sample index out of range");
  if (z.z.size() != means.cols()) throw InputError("log_q_joint: latent dimension mismatch");
  if (!(lambda > 0.0)) throw InputError("log_q_joint: lambda must be positive");
  const double scale = 0.5 / lambda;
  std::vector<double> terms(static_cast<std::size_t>(means.rows()));
  for (Eigen::Index j = 0; j < means.rows(); ++j)
    terms[static_cast<std::size_t>(j)] = -scale * sq_dist(means.row(j).transpose(), z.z);
  return terms[i] + prior.log_density(z.z) - log_sum_exp(terms);
}

std::vector<OneHot> select_by_column_ratio(const Matrix& log_scores, const Vector& log_sums,
                                           const CategoricalPrior& prior) {
  const auto K = static_cast<std::size_t>(log_scores.cols());
  if (static_cast<std::size_t>(log_sums.size()) != K || prior.classes() != K)
    throw InputError("select: class count mismatch");
  std::vector<std::size_t> eligible;
  for (std::size_t k = 0; k < K; ++k)
    if (log_sums(static_cast<Eigen::Index>(k)) != kNegInf) eligible.push_back(k);
  if (eligible.empty()) throw InputError("select: every class column sums to zero");

  std::vector<OneHot> out;
  out.reserve(static_cast<std::size_t>(log_scores.rows()));
  for (Eigen::Index i = 0; i < log_scores.rows(); ++i) {
    std::size_t best = eligible.front();
    double best_score = kNegInf;
    for (std::size_t k : eligible) {
      const auto kk = static_cast<Eigen::Index>(k);
      const double s = log_scores(i, kk) + prior.log_prob(k) - log_sums(kk);
      if (s > best_score) {
        best_score = s;
        best = k;
      }
    }
    out.push_back(OneHot{best, K});
  }
  return out;
}

std::vector<OneHot> select_latent_categorical(const CategoricalEncodings& phi, const CategoricalPrior& prior) {
  if (phi.batch_size() == 0) throw InputError("select_latent_categorical: empty batch");
  return select_by_column_ratio(phi.log_probs(), column_log_sums(phi.log_probs()), prior);
}

std::vector<OneHot> select_latent_categorical(const CategoricalEncodings& phi) {
  return select_latent_categorical(phi, CategoricalPrior::uniform(phi.classes()));
}

std::vector<OneHot> select_latent_categorical(const CategoricalEncodings& phi, const Vector& normalizer_log_sums,
                                              const CategoricalPrior& prior) {
  if (phi.batch_size() == 0) throw InputError("select_latent_categorical: empty batch");
  return select_by_column_ratio(phi.log_probs(), normalizer_log_sums, prior);
}

double gaussian_selection_objective(const Vector& phi_i, const Matrix& population, const Vector& z, double lambda) {
  const double scale = 0.5 / lambda;
  std::vector<double> terms(static_cast<std::size_t>(population.rows()));
  for (Eigen::Index j = 0; j < population.rows(); ++j)
    terms[static_cast<std::size_t>(j)] = -scale * sq_dist(population.row(j).transpose(), z);
  return scale * sq_dist(phi_i, z) + log_sum_exp(terms);
}

RealVec select_latent_gaussian(const Vector& phi_i, const Matrix& population, double lambda,
                               const SpherePrior& prior, const GaussianSelectionOptions& options) {
  if (population.rows() == 0) throw InputError("select_latent_gaussian: empty queue");
  if (!(lambda > 0.0)) throw InputError("select_latent_gaussian: lambda must be positive");
  if (population.cols() != phi_i.size() || static_cast<std::size_t>(phi_i.size()) != prior.dim())
    throw InputError("select_latent_gaussian: dimension mismatch");

  const double scale = 0.5 / lambda;
  const double eta0 = options.step_size.value_or(0.1 * lambda);
  Vector z = prior.project(phi_i);
  double f = gaussian_selection_objective(phi_i, population, z, lambda);
  std::vector<double> terms(static_cast<std::size_t>(population.rows()));

  for (std::size_t step = 0; step < options.steps; ++step) {
    for (Eigen::Index j = 0; j < population.rows(); ++j)
      terms[static_cast<std::size_t>(j)] = -scale * sq_dist(population.row(j).transpose(), z);
    const double lse = log_sum_exp(terms);
    Vector weighted = Vector::Zero(z.size());
    for (Eigen::Index j = 0; j < population.rows(); ++j)
      weighted += std::exp(terms[static_cast<std::size_t>(j)] - lse) * population.row(j).transpose();
    const Vector grad = (weighted - phi_i) / lambda;

    bool moved = false;
    double eta = eta0;
    for (int h = 0; h <= options.max_halvings; ++h, eta *= 0.5) {
      Vector cand = prior.project(z - eta * grad);
      const double fc = gaussian_selection_objective(phi_i, population, cand, lambda);
      if (fc <= f) {
        z = std::move(cand);
        f = fc;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return RealVec{std::move(z)};
}

RealVec select_latent_gaussian(const Vector& phi_i, const RecentQueue& queue, double lambda,
                               const SpherePrior& prior, const GaussianSelectionOptions& options) {
  if (queue.empty()) throw InputError("select_latent_gaussian: empty queue");
  return select_latent_gaussian(phi_i, queue.as_matrix(), lambda, prior, options);
}

LossAndGrad encoder_loss_categorical(const CategoricalEncodings& phi, std::span<const OneHot> assignments) {
  const Eigen::Index b = static_cast<Eigen::Index>(phi.batch_size());
  const Eigen::Index K = static_cast<Eigen::Index>(phi.classes());
  if (static_cast<Eigen::Index>(assignments.size()) != b)
    throw InputError("encoder_loss_categorical: " + std::to_string(assignments.size()) +
                     " assignments for a batch of " + std::to_string(b));
  const Matrix& logp = phi.log_probs();
  const Vector lse = column_log_sums(logp);

  Vector assigned = Vector::Zero(K);  // n_k
  double loss = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto k = static_cast<Eigen::Index>(assignments[static_cast<std::size_t>(i)].index);
    if (k >= K) throw InputError("encoder_loss_categorical: assignment out of range");
    assigned(k) += 1.0;
    loss -= logp(i, k) - lse(k);
  }

  // G = dloss/dlogp, then chain through the row-wise log-softmax.
  Matrix grad(b, K);
  for (Eigen::Index i = 0; i < b; ++i) {
    double row_sum = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) {
      const double r = (lse(k) == kNegInf || assigned(k) == 0.0) ? 0.0 : std::exp(logp(i, k) - lse(k));
      double g = assigned(k) * r;
      if (static_cast<Eigen::Index>(assignments[static_cast<std::size_t>(i)].index) == k) g -= 1.0;
      grad(i, k) = g;
      row_sum += g;
    }
    for (Eigen::Index k = 0; k < K; ++k) grad(i, k) -= std::exp(logp(i, k)) * row_sum;
  }
  return {loss, std::move(grad)};
}

LossAndGrad encoder_loss_gaussian(const Matrix& phi, const Matrix& assignments, double lambda) {
  if (phi.rows() != assignments.rows() || phi.cols() != assignments.cols())
    throw InputError("encoder_loss_gaussian: phi " + shape_str(phi) + " vs assignments " + shape_str(assignments));
  if (!(lambda > 0.0)) throw InputError("encoder_loss_gaussian: lambda must be positive");
  const Eigen::Index b = phi.rows();
  const double scale = 0.5 / lambda;

  double loss = 0.0;
  Matrix grad = Matrix::Zero(b, phi.cols());
  std::vector<double> terms(static_cast<std::size_t>(b));
  for (Eigen::Index i = 0; i < b; ++i) {
    const RowVector diff_own = phi.row(i) - assignments.row(i);
    loss += scale * diff_own.squaredNorm();
    grad.row(i) += 2.0 * scale * diff_own;

    for (Eigen::Index j = 0; j < b; ++j)
      terms[static_cast<std::size_t>(j)] = -scale * (phi.row(j) - assignments.row(i)).squaredNorm();
    const double lse = log_sum_exp(terms);
    loss += lse;
    for (Eigen::Index j = 0; j < b; ++j) {
      const double w = std::exp(terms[static_cast<std::size_t>(j)] - lse);
      grad.row(j) -= w * 2.0 * scale * (phi.row(j) - assignments.row(i));
    }
  }
  return {loss, std::move(grad)};
}

LossAndGrad confusion_loss(const CategoricalEncodings& phi_fake, const CategoricalPrior& prior) {
  if (prior.classes() != phi_fake.classes()) throw InputError("confusion_loss: class count mismatch");
  const Matrix& logp = phi_fake.log_probs();
  const Eigen::Index K = logp.cols();
  double loss = 0.0;
  Matrix grad(logp.rows(), K);
  for (Eigen::Index i = 0; i < logp.rows(); ++i) {
    for (Eigen::Index k = 0; k < K; ++k) {
      const double pk = prior.prob(static_cast<std::size_t>(k));
      loss -= pk * logp(i, k);
      grad(i, k) = std::exp(logp(i, k)) - pk;
    }
  }
  return {loss, std::move(grad)};
}

LossAndGrad supervised_loss(const CategoricalEncodings& phi, std::span<const std::size_t> labels) {
  const Eigen::Index b = static_cast<Eigen::Index>(phi.batch_size());
  if (b == 0) throw InputError("supervised_loss: empty batch");
  if (static_cast<Eigen::Index>(labels.size()) != b)
    throw InputError("supervised_loss: label count does not match batch size");
  const Matrix& logp = phi.log_probs();
  Matrix grad = logp.array().exp().matrix();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    const std::size_t y = labels[static_cast<std::size_t>(i)];
    if (y >= phi.classes())
      throw InputError("supervised_loss: label " + std::to_string(y) + " outside [0," +
                       std::to_string(phi.classes()) + ")");
    loss -= logp(i, static_cast<Eigen::Index>(y));
    grad(i, static_cast<Eigen::Index>(y)) -= 1.0;
  }
  const double inv_b = 1.0 / static_cast<double>(b);
  return {loss * inv_b, grad * inv_b};
}

}  // namespace discoder::core
