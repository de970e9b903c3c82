#include "discoder/data/synth.hpp"
#include "discoder/errors.hpp"
#include "discoder/eval/assign.hpp"
#include "discoder/eval/kmeans.hpp"
#include "discoder/eval/linear_probe.hpp"
#include "discoder/eval/report.hpp"
#include "discoder/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace discoder;
using namespace discoder::eval;

namespace {

ClusterAssignment hard(std::vector<std::size_t> cluster, std::size_t k) {
  ClusterAssignment a;
  a.cluster = std::move(cluster);
  a.clusters = k;
  return a;
}

Matrix one_hot(const std::vector<std::size_t>& idx, std::size_t k) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < idx.size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(idx[i])) = 1.0;
  return m;
}

std::vector<std::size_t> iota(std::size_t from, std::size_t to) {
  std::vector<std::size_t> v(to - from);
  std::iota(v.begin(), v.end(), from);
  return v;
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("max intersection: identity and hand examples") {
    const data::Labels y{0, 1, 2, 1, 0};
    const auto a = hard({0, 1, 2, 1, 0}, 3);
    const auto map = assign_labels_max_intersection(a, y);
    CHECK(map == std::vector<std::size_t>{0, 1, 2});
    CHECK(clustering_error(apply_mapping(a, map), y) == 0.0);

    const auto b = hard({0, 0, 1}, 2);
    const data::Labels y2{0, 0, 1};
    CHECK(assign_labels_max_intersection(b, y2) == std::vector<std::size_t>{0, 1});

    const auto single = hard({0, 0, 0, 0}, 1);
    const data::Labels bal{0, 1, 0, 1};
    CHECK(clustering_error(apply_mapping(single, assign_labels_max_intersection(single, bal)), bal) == 50.0);
  }

  TEST_CASE("max intersection: ties to the lowest class, empty clusters get the sentinel") {
    const auto a = hard({0, 0, 2, 2}, 3);
    const data::Labels y{1, 0, 1, 1};
    const auto map = assign_labels_max_intersection(a, y);
    CHECK(map[0] == 0);
    CHECK(map[1] == kUnmapped);
    CHECK(map[2] == 1);
    CHECK(clustering_error(apply_mapping(a, map), y) == 25.0);
  }

  TEST_CASE("max confidence: hand example and sentinel") {
    Matrix p(3, 2);
    p << 0.9, 0.1, 0.6, 0.4, 0.2, 0.8;
    const data::Labels y{0, 0, 1};
    CHECK(assign_labels_max_confidence(p, y) == std::vector<std::size_t>{0, 1});
    CHECK(error_max_confidence(p, y) == 0.0);

    Matrix dead(2, 3);
    dead << 0.5, 0.5, 0.0, 0.3, 0.7, 0.0;
    const auto map = assign_labels_max_confidence(dead, {1, 0});
    CHECK(map[2] == kUnmapped);
  }

  TEST_CASE("pure clusterings: both schemes give zero and agree; permutation invariance") {
    Engine rng(1);
    std::uniform_int_distribution<std::size_t> pick(0, 4);
    data::Labels y(60);
    for (auto& l : y) l = pick(rng);
    const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
    std::vector<std::size_t> cl;
    for (auto l : y) cl.push_back(perm[l]);
    const Matrix p = one_hot(cl, 5);
    CHECK(error_max_intersection(p, y) == 0.0);
    CHECK(error_max_confidence(p, y) == 0.0);

    // an impure clustering gives the same errors under any relabeling of clusters
    Matrix noisy = p;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (Eigen::Index i = 0; i < noisy.size(); ++i) noisy.data()[i] += u(rng);
    for (Eigen::Index i = 0; i < noisy.rows(); ++i) noisy.row(i) /= noisy.row(i).sum();
    Matrix shuffled(noisy.rows(), noisy.cols());
    for (Eigen::Index k = 0; k < 5; ++k) shuffled.col(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(k)])) = noisy.col(k);
    CHECK(error_max_intersection(noisy, y) == error_max_intersection(shuffled, y));
    CHECK(error_max_confidence(noisy, y) == error_max_confidence(shuffled, y));
  }

  TEST_CASE("clustering error and accuracy") {
    CHECK(clustering_error({1, 2, 3}, {1, 2, 3}) == 0.0);
    CHECK(clustering_error({0, 1, 1, 1}, {0, 1, 1, 0}) == 25.0);
    Engine rng(2);
    std::uniform_int_distribution<std::size_t> pick(0, 2);
    for (int t = 0; t < 50; ++t) {
      data::Labels a(37), b(37);
      for (auto& v : a) v = pick(rng);
      for (auto& v : b) v = pick(rng);
      CHECK(clustering_error(a, b) + clustering_accuracy(a, b) == 100.0);
    }
    CHECK_THROWS_AS(clustering_error({1}, {1, 2}), InputError);
  }

  TEST_CASE("linear probe: separable embeddings reach 100%") {
    const auto ds = data::synth_gmm(2, 3, 100, 8.0, 1.0, 4);
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < ds.size(); ++i) (i % 2 ? test : train).push_back(i);
    const auto r = linear_probe(ds.features, *ds.labels, train, test, {.epochs = 50, .learning_rate = 0.01});
    CHECK(r.test_accuracy == 100.0);
    CHECK(r.train_accuracy == 100.0);
  }

  TEST_CASE("linear probe: random labels give chance accuracy") {
    Engine rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix x(4000, 5);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
    data::Labels y(4000);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = i % 2;
    std::shuffle(y.begin(), y.end(), rng);
    const auto r = linear_probe(x, y, iota(0, 2000), iota(2000, 4000), {.epochs = 20});
    CHECK(r.test_accuracy >= 45.0);
    CHECK(r.test_accuracy <= 55.0);
  }

  TEST_CASE("linear probe: one-hot-of-label embeddings and single-class rejection") {
    data::Labels y;
    for (std::size_t i = 0; i < 90; ++i) y.push_back(i % 3);
    const Matrix x = one_hot(y, 3);
    const auto r = linear_probe(x, y, iota(0, 45), iota(45, 90), {.epochs = 100, .learning_rate = 0.01});
    CHECK(r.test_accuracy == 100.0);
    CHECK_THROWS_AS(linear_probe(x, y, {0, 3, 6}, {1}), InputError);
  }

  TEST_CASE("k-means: K=n gives zero inertia") {
    const auto ds = data::synth_gmm(3, 2, 4, 5.0, 1.0, 1);
    const auto r = kmeans_baseline(ds.features, ds.size(), 2, 3);
    CHECK(r.inertia == 0.0);
    CHECK_THROWS_AS(kmeans_baseline(ds.features, ds.size() + 1, 1, 0), InputError);
  }

  TEST_CASE("k-means: two far 1-D blobs split perfectly") {
    const auto ds = data::synth_gmm(2, 1, 100, 50.0, 1.0, 2);
    const auto r = kmeans_baseline(ds.features, 2, 3, 4);
    const data::Labels mapped =
        apply_mapping(r.assignment, assign_labels_max_intersection(r.assignment, *ds.labels));
    CHECK(clustering_error(mapped, *ds.labels) == 0.0);
  }

  TEST_CASE("k-means: inertia is monotone and restarts only help") {
    const auto ds = data::synth_gmm(6, 3, 80, 2.0, 1.0, 3);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto one = kmeans_baseline(ds.features, 6, 1, seed);
      const auto many = kmeans_baseline(ds.features, 6, 8, seed);
      for (std::size_t i = 1; i < one.inertia_history.size(); ++i)
        CHECK(one.inertia_history[i] <= one.inertia_history[i - 1]);
      CHECK(many.inertia <= one.inertia);
      CHECK(many.inertia == *std::min_element(many.restart_inertia.begin(), many.restart_inertia.end()));
    }
  }

  TEST_CASE("report lists clusters and both errors") {
    Matrix p(4, 3);
    p << 0.8, 0.1, 0.1, 0.7, 0.2, 0.1, 0.1, 0.8, 0.1, 0.2, 0.7, 0.1;
    const auto r = evaluate_clustering(p, {0, 0, 1, 0});
    CHECK(r.clusters.size() == 3);
    CHECK(r.empty_clusters == 1);
    CHECK(r.error_intersection == 25.0);
    CHECK(r.clusters[0].purity == 100.0);
    CHECK(r.clusters[1].purity == 50.0);
    const auto text = format_report(r);
    CHECK(text.find("max-intersection") != std::string::npos);
    CHECK(text.find("max-confidence") != std::string::npos);
  }
}
