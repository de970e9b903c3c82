#include "discoder/core/latent.hpp"
#include "discoder/core/math.hpp"
#include "discoder/core/objectives.hpp"
#include "discoder/errors.hpp"
#include "discoder/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

using namespace discoder;
using namespace discoder::core;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double lse(std::vector<double> v) { return log_sum_exp(v); }

// Columns p(z=0|.), p(z=1|.) with p(z=1|.) = [0.9, 0.2, 0.5].
CategoricalEncodings example_batch() {
  Matrix p(3, 2);
  p << 0.1, 0.9, 0.8, 0.2, 0.5, 0.5;
  return CategoricalEncodings::from_probabilities(p);
}

Matrix random_logits(Eigen::Index b, Eigen::Index k, Engine& rng, double scale = 2.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(b, k);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Categorical cross-entropy written directly from probabilities.
double cross_entropy_oracle(const Matrix& logits, const std::vector<std::size_t>& labels) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    double z = 0.0;
    for (Eigen::Index k = 0; k < logits.cols(); ++k) z += std::exp(logits(i, k));
    total += -std::log(std::exp(logits(i, static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)]))) / z);
  }
  return total / static_cast<double>(logits.rows());
}

}  // namespace

TEST_SUITE("core") {
  TEST_CASE("log_sum_exp examples") {
    CHECK(lse({0, 0}) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(lse({1000, 1000}) == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-15));
    CHECK(std::abs(lse({0, 1, 2}) - 2.40760596444438030) < 1e-14);
    CHECK_THROWS_AS(lse({}), InputError);
    CHECK_THROWS_AS(lse({0.0, std::nan("")}), InputError);
    CHECK(lse({-kInf, 0.0}) == 0.0);
    CHECK(lse({-kInf, -kInf}) == -kInf);
  }

  TEST_CASE("log_sum_exp shift identity") {
    Engine rng(1);
    std::normal_distribution<double> n(0.0, 1000.0);
    for (int t = 0; t < 100; ++t) {
      std::vector<double> v(7);
      for (auto& x : v) x = n(rng);
      const double c = n(rng);
      std::vector<double> shifted = v;
      for (auto& x : shifted) x += c;
      CHECK(std::abs(lse(shifted) - (lse(v) + c)) <= 1e-12 * std::max(1.0, std::abs(lse(v) + c)));
    }
  }

  TEST_CASE("log_q_joint hand example") {
    const auto phi = example_batch();
    const auto prior = CategoricalPrior::uniform(2);
    CHECK(std::abs(log_q_joint(phi, 0, {1, 2}, prior) - (-1.26851132546350716)) < 1e-12);
  }

  TEST_CASE("single-sample batch reduces log_q_joint to the prior") {
    Engine rng(2);
    const Matrix logits = random_logits(1, 5, rng);
    const auto phi = CategoricalEncodings::from_logits(logits);
    const auto prior = CategoricalPrior::uniform(5);
    for (std::size_t k = 0; k < 5; ++k) CHECK(std::abs(log_q_joint(phi, 0, {k, 5}, prior) + std::log(5.0)) < 1e-12);

    const Matrix means = random_logits(1, 3, rng);
    const SpherePrior sphere(3);
    const Vector z = sphere.project(Vector::Ones(3));
    CHECK(std::abs(log_q_joint(means, 0, RealVec{z}, 0.7, sphere) - sphere.log_density(z)) < 1e-12);
  }

  TEST_CASE("zero probability gives -inf, not a crash") {
    Matrix p(2, 2);
    p << 1.0, 0.0, 0.5, 0.5;
    const auto phi = CategoricalEncodings::from_probabilities(p);
    CHECK(log_q_joint(phi, 0, {1, 2}, CategoricalPrior::uniform(2)) == -kInf);
  }

  TEST_CASE("joint marginal: sum_i q(x_i, e_k) = 1/K") {
    Engine rng(3);
    for (int t = 0; t < 20; ++t) {
      const auto phi = CategoricalEncodings::from_logits(random_logits(64, 8, rng, 3.0));
      const auto prior = CategoricalPrior::uniform(8);
      double total = 0.0;
      for (std::size_t k = 0; k < 8; ++k) {
        double col = 0.0;
        for (std::size_t i = 0; i < 64; ++i) col += std::exp(log_q_joint(phi, i, {k, 8}, prior));
        CHECK(std::abs(col - 1.0 / 8.0) < 1e-12);
        total += col;
      }
      CHECK(std::abs(total - 1.0) < 1e-12);
    }
  }

  TEST_CASE("categorical selection examples") {
    const auto z = select_latent_categorical(example_batch());
    REQUIRE(z.size() == 3);
    CHECK(z[0].index == 1);  // 0.9/1.6 = 0.5625 vs 0.1/1.4 = 0.0714
    CHECK(z[1].index == 0);  // 0.2/1.6 = 0.125 vs 0.8/1.4 = 0.571
    CHECK(z[2].index == 0);  // 0.5/1.6 = 0.3125 vs 0.5/1.4 = 0.357

    Engine rng(4);
    for (const auto& one : select_latent_categorical(CategoricalEncodings::from_logits(random_logits(6, 1, rng))))
      CHECK(one.index == 0);

    Matrix same = Matrix::Constant(4, 2, 0.5);
    for (const auto& one : select_latent_categorical(CategoricalEncodings::from_probabilities(same))) CHECK(one.index == 0);
  }

  TEST_CASE("a class column summing to zero is excluded") {
    Matrix p(2, 3);
    p << 0.0, 0.5, 0.5, 0.0, 0.9, 0.1;
    const auto z = select_latent_categorical(CategoricalEncodings::from_probabilities(p));
    CHECK(z[0].index == 2);
    CHECK(z[1].index == 1);
    Vector dead = Vector::Constant(3, -kInf);
    CHECK_THROWS_AS(select_by_column_ratio(Matrix::Zero(2, 3), dead, CategoricalPrior::uniform(3)), InputError);
  }

  TEST_CASE("selection equals the brute-force argmax of log_q_joint") {
    Engine rng(5);
    std::uniform_int_distribution<int> bdist(1, 64), kdist(1, 8);
    for (int t = 0; t < 200; ++t) {
      const auto b = bdist(rng);
      const auto k = static_cast<std::size_t>(kdist(rng));
      const auto phi = CategoricalEncodings::from_logits(random_logits(b, static_cast<Eigen::Index>(k), rng, 2.5));
      const auto prior = CategoricalPrior::uniform(k);
      const auto z = select_latent_categorical(phi, prior);
      for (std::size_t i = 0; i < static_cast<std::size_t>(b); ++i) {
        std::size_t best = 0;
        double best_val = -kInf;
        for (std::size_t c = 0; c < k; ++c) {
          const double v = log_q_joint(phi, i, {c, k}, prior);
          if (v > best_val) {
            best_val = v;
            best = c;
          }
        }
        CHECK(z[i].index == best);
      }
    }
  }

  TEST_CASE("per-class scaling of unnormalized scores leaves the selection unchanged") {
    Engine rng(6);
    std::uniform_real_distribution<double> scale(-5.0, 5.0);
    for (int t = 0; t < 50; ++t) {
      const Matrix log_scores = random_logits(30, 6, rng);
      const auto prior = CategoricalPrior::uniform(6);
      const auto base = select_by_column_ratio(log_scores, column_log_sums(log_scores), prior);
      Matrix scaled = log_scores;
      for (Eigen::Index k = 0; k < 6; ++k) scaled.col(k).array() += scale(rng);
      const auto again = select_by_column_ratio(scaled, column_log_sums(scaled), prior);
      for (std::size_t i = 0; i < base.size(); ++i) CHECK(base[i].index == again[i].index);
    }
  }

  TEST_CASE("encoder loss: identical batch closed form b log b") {
    for (std::size_t b : {1u, 2u, 7u, 100u}) {
      Matrix p = Matrix::Zero(static_cast<Eigen::Index>(b), 3);
      p.col(0).setConstant(0.2);
      p.col(1).setConstant(0.3);
      p.col(2).setConstant(0.5);
      std::vector<OneHot> z(b, OneHot{1, 3});
      const double loss = encoder_loss_categorical(CategoricalEncodings::from_probabilities(p), z).loss;
      const double expect = static_cast<double>(b) * std::log(static_cast<double>(b));
      CHECK(std::abs(loss - expect) <= 1e-12 * std::max(1.0, expect));
    }
  }

  TEST_CASE("encoder loss: hand example") {
    const std::vector<OneHot> z{{1, 2}, {0, 2}, {1, 2}};
    // -(log .9 - log 1.6) - (log .8 - log 1.4) - (log .5 - log 1.6)
    CHECK(std::abs(encoder_loss_categorical(example_batch(), z).loss - 2.29813074264466540) < 1e-12);
  }

  TEST_CASE("gaussian encoder loss examples") {
    const Matrix one = (Matrix(1, 2) << 0.3, -1.2).finished();
    CHECK(encoder_loss_gaussian(one, one, 0.8).loss == 0.0);
    const Matrix phi = (Matrix(2, 1) << 0.0, 2.0).finished();
    CHECK(std::abs(encoder_loss_gaussian(phi, phi, 0.5).loss - 0.0362998558356194807) < 1e-14);
  }

  TEST_CASE("confusion loss examples") {
    const auto prior = CategoricalPrior::uniform(4);
    const auto uniform = CategoricalEncodings::from_probabilities(Matrix::Constant(3, 4, 0.25));
    CHECK(std::abs(confusion_loss(uniform, prior).loss - 3.0 * std::log(4.0)) < 1e-12);

    const auto row = CategoricalEncodings::from_probabilities((Matrix(1, 2) << 0.9, 0.1).finished());
    CHECK(std::abs(confusion_loss(row, CategoricalPrior::uniform(2)).loss - 1.20397280432593599) < 1e-12);

    double prev = kInf;
    for (double t = 0.0; t <= 1.0; t += 0.1) {
      const double a = (1.0 - t) * 0.95 + t * 0.5;
      const auto mixed = CategoricalEncodings::from_probabilities((Matrix(1, 2) << a, 1.0 - a).finished());
      const double loss = confusion_loss(mixed, CategoricalPrior::uniform(2)).loss;
      CHECK(loss < prev);
      prev = loss;
    }
  }

  TEST_CASE("confusion loss stays finite for extreme logits") {
    const auto enc = CategoricalEncodings::from_logits((Matrix(1, 2) << 0.0, -800.0).finished());
    const auto lg = confusion_loss(enc, CategoricalPrior::uniform(2));
    CHECK(std::isfinite(lg.loss));
    CHECK(lg.loss == doctest::Approx(400.0).epsilon(1e-12));
    CHECK(all_finite(lg.grad));
  }

  TEST_CASE("supervised loss examples and cross-entropy oracle") {
    const auto perfect = CategoricalEncodings::from_probabilities((Matrix(1, 2) << 0.0, 1.0).finished());
    CHECK(supervised_loss(perfect, std::vector<std::size_t>{1}).loss == 0.0);
    const auto row = CategoricalEncodings::from_probabilities((Matrix(1, 2) << 0.25, 0.75).finished());
    CHECK(std::abs(supervised_loss(row, std::vector<std::size_t>{1}).loss - 0.287682072451780927) < 1e-14);
    CHECK_THROWS_AS(supervised_loss(row, std::vector<std::size_t>{2}), InputError);

    Engine rng(7);
    for (int t = 0; t < 50; ++t) {
      const Matrix logits = random_logits(10, 5, rng);
      std::vector<std::size_t> y(10);
      std::uniform_int_distribution<std::size_t> pick(0, 4);
      for (auto& l : y) l = pick(rng);
      CHECK(std::abs(supervised_loss(CategoricalEncodings::from_logits(logits), y).loss - cross_entropy_oracle(logits, y)) <
            1e-12);
    }
  }

  TEST_CASE("gaussian selection: self-only queue keeps the projected initializer") {
    const SpherePrior sphere(3);
    const Vector phi = (Vector(3) << 0.3, -0.4, 1.1).finished();
    const Matrix queue = phi.transpose();
    const auto z = select_latent_gaussian(phi, queue, 0.5, sphere);
    CHECK((z.z - sphere.project(phi)).cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("gaussian selection: a far point pushes z away and never raises the objective") {
    const SpherePrior sphere(2);
    const Vector phi = (Vector(2) << 1.0, 0.2).finished();
    Matrix queue(2, 2);
    queue << 1.0, 0.2, 2.0, 30.0;
    const double lambda = 0.05;
    const Vector init = sphere.project(phi);
    const auto z = select_latent_gaussian(phi, queue, lambda, sphere);
    CHECK(sphere.contains(z.z));
    CHECK(gaussian_selection_objective(phi, queue, z.z, lambda) <= gaussian_selection_objective(phi, queue, init, lambda));
    const Vector far = queue.row(1).transpose();
    CHECK((z.z - far).norm() >= (init - far).norm());
  }

  TEST_CASE("gaussian selection versus grid search on the circle") {
    Engine rng(8);
    std::normal_distribution<double> n(0.0, 1.0);
    const SpherePrior sphere(2);
    const double lambda = 1.0;
    for (int t = 0; t < 20; ++t) {
      Matrix queue(5, 2);
      for (Eigen::Index i = 0; i < queue.size(); ++i) queue.data()[i] = n(rng);
      const Vector phi = queue.row(0).transpose();

      const int grid = 3600;
      double best = kInf, resolution = 0.0, prev = 0.0;
      for (int g = 0; g <= grid; ++g) {
        const double a = 2.0 * std::numbers::pi * g / grid;
        const Vector zz = sphere.radius() * (Vector(2) << std::cos(a), std::sin(a)).finished();
        const double v = gaussian_selection_objective(phi, queue, zz, lambda);
        if (g > 0) resolution = std::max(resolution, std::abs(v - prev));
        prev = v;
        best = std::min(best, v);
      }

      GaussianSelectionOptions opts;
      opts.steps = 50;
      const auto z = select_latent_gaussian(phi, queue, lambda, sphere, opts);
      const double got = gaussian_selection_objective(phi, queue, z.z, lambda);
      CHECK(got <= gaussian_selection_objective(phi, queue, sphere.project(phi), lambda) + 1e-15);
      CHECK(got >= best - resolution);

      opts.steps = 200;
      const auto converged = select_latent_gaussian(phi, queue, lambda, sphere, opts);
      const double value = gaussian_selection_objective(phi, queue, converged.z, lambda);
      CHECK(value <= best + resolution);
      CHECK(value >= best - resolution);
    }
  }

  TEST_CASE("sphere prior") {
    const SpherePrior s(4);
    CHECK(s.radius() == doctest::Approx(2.0));
    const Vector z = s.project((Vector(4) << 1, 2, 3, 4).finished());
    CHECK(std::abs(z.norm() - 2.0) < 1e-12);
    CHECK(s.contains(z));
    CHECK(s.log_density(2.0 * z) == -kInf);
    // surface area of the radius-2 sphere in R^4 is 2 pi^2 r^3
    CHECK(s.log_density(z) == doctest::Approx(-std::log(2.0 * std::numbers::pi * std::numbers::pi * 8.0)));
    const Vector zero_proj = s.project(Vector::Zero(4));
    CHECK(all_finite(zero_proj));
    CHECK(s.contains(zero_proj));
    CHECK_THROWS_AS(SpherePrior(3, 0.0), InputError);
  }

  TEST_CASE("categorical encodings validate rows") {
    CHECK_THROWS_AS(CategoricalEncodings::from_probabilities((Matrix(1, 2) << 0.5, 0.6).finished()), InputError);
    CHECK_THROWS_AS(CategoricalEncodings::from_probabilities((Matrix(1, 2) << 1.2, -0.2).finished()), InputError);
    Engine rng(9);
    const auto enc = CategoricalEncodings::from_logits(random_logits(5, 4, rng, 10.0));
    const Matrix p = enc.probabilities();
    for (Eigen::Index i = 0; i < p.rows(); ++i) CHECK(std::abs(p.row(i).sum() - 1.0) < 1e-12);
  }

  TEST_CASE("recent queue is a bounded FIFO") {
    RecentQueue q(3);
    for (int i = 0; i < 5; ++i) q.push(Vector::Constant(2, i));
    CHECK(q.size() == 3);
    const Matrix m = q.as_matrix();
    CHECK(m(0, 0) == 2.0);
    CHECK(m(2, 0) == 4.0);
    q.push_rows(Matrix::Constant(2, 2, 9.0));
    CHECK(q.as_matrix()(0, 0) == 4.0);
    CHECK(RecentQueue().capacity() == 1000);
    CHECK_THROWS_AS(RecentQueue(0), InputError);
  }

  TEST_CASE("encoding head validation") {
    CHECK_NOTHROW(validate(EncodingHead{CategoricalHead{1}}));
    CHECK_THROWS_AS(validate(EncodingHead{CategoricalHead{0}}), InputError);
    CHECK_THROWS_AS(validate(EncodingHead{GaussianHead{0, 1.0}}), InputError);
    CHECK_THROWS_AS(validate(EncodingHead{GaussianHead{2, 0.0}}), InputError);
  }
}
