#pragma once

#include "discoder/core/latent.hpp"
#include "discoder/tensor.hpp"

#include <optional>
#include <span>
#include <vector>

namespace discoder::core {

struct LossAndGrad {
  double loss = 0.0;
  Matrix grad;
};

/// Per-class log sum_j exp(log_scores(j, k)); -inf for an all-zero column.
Vector column_log_sums(const Matrix& log_scores);

/// log q(x_i, e_k) = log p(e_k|x_i) + log p(e_k) - log sum_j p(e_k|x_j), with j
/// over the rows of `phi`. A zero probability for the chosen class gives -inf.
double log_q_joint(const CategoricalEncodings& phi, std::size_t i, const OneHot& z, const CategoricalPrior& prior);

/// Gaussian case: p(z|x) = N(phi(x), lambda I); the Gaussian normalizers cancel.
double log_q_joint(const Matrix& means, std::size_t i, const RealVec& z, double lambda, const SpherePrior& prior);

/// argmax_k [log_scores(i,k) + log p(e_k) - log_sums(k)] per row; classes whose
/// normalizer is -inf are skipped and ties go to the lowest index.
/// Scores need not be normalized: shifting a column of log_scores and its
/// normalizer by the same constant leaves the result unchanged.
std::vector<OneHot> select_by_column_ratio(const Matrix& log_scores, const Vector& log_sums,
                                           const CategoricalPrior& prior);

/// Categorical latent selection with the normalizer taken over the batch itself.
std::vector<OneHot> select_latent_categorical(const CategoricalEncodings& phi, const CategoricalPrior& prior);
std::vector<OneHot> select_latent_categorical(const CategoricalEncodings& phi);

/// Same, with per-class normalizers computed over another population (e.g. the full dataset).
std::vector<OneHot> select_latent_categorical(const CategoricalEncodings& phi, const Vector& normalizer_log_sums,
                                              const CategoricalPrior& prior);

struct GaussianSelectionOptions {
  std::size_t steps = 25;
  std::optional<double> step_size;  // default 0.1 * lambda
  int max_halvings = 10;
};

/// ||phi_i - z||^2 / (2 lambda) + log sum_j exp(-||phi_j - z||^2 / (2 lambda)), j over rows of `population`.
double gaussian_selection_objective(const Vector& phi_i, const Matrix& population, const Vector& z, double lambda);

/// Projected gradient descent on the objective above, started at the sphere
/// projection of phi_i. A step that would raise the objective is halved up to
/// `max_halvings` times and dropped if it still does, so the result is never
/// worse than the initializer.
RealVec select_latent_gaussian(const Vector& phi_i, const Matrix& population, double lambda,
                               const SpherePrior& prior, const GaussianSelectionOptions& options = {});
RealVec select_latent_gaussian(const Vector& phi_i, const RecentQueue& queue, double lambda,
                               const SpherePrior& prior, const GaussianSelectionOptions& options = {});

/// -sum_i [log p(z_i|x_i) - log sum_{j in batch} p(z_i|x_j)], gradient with respect to the head logits.
LossAndGrad encoder_loss_categorical(const CategoricalEncodings& phi, std::span<const OneHot> assignments);

/// sum_i ||phi_i - z_i||^2/(2 lambda) + sum_i log sum_j exp(-||phi_j - z_i||^2/(2 lambda)),
/// gradient with respect to phi.
LossAndGrad encoder_loss_gaussian(const Matrix& phi, const Matrix& assignments, double lambda);

/// -sum_i sum_k p(e_k) log p(e_k|xbar_i) on fake samples, gradient with respect to logits.
LossAndGrad confusion_loss(const CategoricalEncodings& phi_fake, const CategoricalPrior& prior);

/// Mean negative log-likelihood of the labels, gradient with respect to logits.
LossAndGrad supervised_loss(const CategoricalEncodings& phi, std::span<const std::size_t> labels);

}  // namespace discoder::core
