// Acceptance runs. Each criterion prints one PASS/FAIL line; details go to
// the lines above it.

#include "discoder/check/gradcheck.hpp"
#include "discoder/core/math.hpp"
#include "discoder/core/objectives.hpp"
#include "discoder/data/idx.hpp"
#include "discoder/data/split.hpp"
#include "discoder/data/synth.hpp"
#include "discoder/eval/assign.hpp"
#include "discoder/eval/kmeans.hpp"
#include "discoder/eval/linear_probe.hpp"
#include "discoder/rng.hpp"
#include "discoder/train/trainer.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace fs = std::filesystem;
using namespace discoder;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Stats {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
};

Stats stats(const std::vector<double>& v) {
  Stats s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

std::string list(const std::vector<double>& v) {
  std::string out;
  for (double x : v) out += fmt::format("{}{:.2f}", out.empty() ? "" : " ", x);
  return out;
}

bool verdict(int criterion, bool pass, const std::string& summary) {
  std::cout << fmt::format("criterion {}: {} {}", criterion, pass ? "PASS" : "FAIL", summary) << std::endl;
  return pass;
}

void note(const std::string& line) { std::cout << "  " << line << std::endl; }

// ---------------------------------------------------------------- criterion 1

Matrix random_logits(std::size_t b, std::size_t k, Engine& rng, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = normal(rng);
  return m;
}

core::CategoricalPrior random_prior(std::size_t k, Engine& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> p(k);
  for (auto& x : p) x = u(rng);
  const double s = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& x : p) x /= s;
  return core::CategoricalPrior(p);
}

std::size_t brute_force_argmax(const core::CategoricalEncodings& enc, std::size_t i, const core::CategoricalPrior& prior) {
  std::size_t best = 0;
  double best_v = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < enc.classes(); ++k) {
    const double v = core::log_q_joint(enc, i, core::OneHot{k, enc.classes()}, prior);
    if (v > best_v) {
      best_v = v;
      best = k;
    }
  }
  return best;
}

bool criterion_properties() {
  const auto t0 = Clock::now();
  Engine rng = make_stream(2024, "acceptance_properties");
  bool ok = true;
  auto record = [&](const std::string& name, bool pass, const std::string& detail) {
    note(fmt::format("{:<34} {}  {}", name, pass ? "ok  " : "FAIL", detail));
    ok = ok && pass;
  };

  // marginal normalization of the batch-constrained joint
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const auto enc = core::CategoricalEncodings::from_logits(random_logits(64, 8, rng, 2.0));
    const auto prior = core::CategoricalPrior::uniform(8);
    for (std::size_t k = 0; k < 8; ++k) {
      double sum = 0.0;
      for (std::size_t i = 0; i < 64; ++i) sum += std::exp(core::log_q_joint(enc, i, core::OneHot{k, 8}, prior));
      worst = std::max(worst, std::abs(sum - 1.0 / 8.0));
    }
  }
  record("marginal normalization", worst <= 1e-12, fmt::format("max |sum - 1/K| = {:.3g}", worst));

  // selection equals brute-force argmax of the joint
  std::size_t mismatches = 0;
  std::uniform_int_distribution<std::size_t> pick_b(1, 40), pick_k(1, 12);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t b = pick_b(rng), k = pick_k(rng);
    const auto enc = core::CategoricalEncodings::from_logits(random_logits(b, k, rng, 3.0));
    const auto prior = random_prior(k, rng);
    const auto z = core::select_latent_categorical(enc, prior);
    for (std::size_t i = 0; i < b; ++i)
      if (z[i].index != brute_force_argmax(enc, i, prior)) ++mismatches;
  }
  record("selection oracle (200 instances)", mismatches == 0, fmt::format("{} mismatching rows", mismatches));

  // rescaling one class column leaves the selection unchanged
  std::size_t changed = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto enc = core::CategoricalEncodings::from_logits(random_logits(30, 6, rng, 2.0));
    const auto prior = random_prior(6, rng);
    Matrix scaled = enc.log_probs();
    std::uniform_real_distribution<double> shift(-20.0, 20.0);
    for (Eigen::Index c = 0; c < scaled.cols(); ++c) scaled.col(c).array() += shift(rng);
    const auto a = core::select_by_column_ratio(enc.log_probs(), core::column_log_sums(enc.log_probs()), prior);
    const auto b = core::select_by_column_ratio(scaled, core::column_log_sums(scaled), prior);
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i].index != b[i].index) ++changed;
  }
  record("per-class scale invariance", changed == 0, fmt::format("{} rows changed", changed));

  // log-sum-exp shift identity
  double lse_err = 0.0;
  std::uniform_real_distribution<double> shift(-700.0, 700.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const Matrix v = random_logits(1, 16, rng, 10.0);
    const double c = shift(rng);
    std::vector<double> a(v.data(), v.data() + 16), b(a);
    for (double& x : b) x += c;
    const double lhs = core::log_sum_exp(b), rhs = core::log_sum_exp(a) + c;
    lse_err = std::max(lse_err, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
  }
  record("log-sum-exp shift identity", lse_err <= 1e-12, fmt::format("max rel error {:.3g}", lse_err));

  // identical batch: loss is b log b
  double closed = 0.0;
  for (std::size_t b : {1u, 2u, 5u, 64u, 100u}) {
    Matrix row = random_logits(1, 5, rng, 1.0);
    const auto enc = core::CategoricalEncodings::from_logits(row.replicate(static_cast<Eigen::Index>(b), 1));
    const auto z = core::select_latent_categorical(enc);
    const double loss = core::encoder_loss_categorical(enc, z).loss;
    const double expect = static_cast<double>(b) * std::log(static_cast<double>(b));
    closed = std::max(closed, std::abs(loss - expect) / std::max(1.0, expect));
  }
  record("identical batch closed form", closed <= 1e-12, fmt::format("max rel error {:.3g}", closed));

  // a single sample carries no information beyond the prior
  bool degenerate = true;
  for (int rep = 0; rep < 100; ++rep) {
    const auto enc = core::CategoricalEncodings::from_logits(random_logits(1, 7, rng, 4.0));
    const auto prior = random_prior(7, rng);
    const auto best = std::max_element(prior.log_probs().begin(), prior.log_probs().end()) - prior.log_probs().begin();
    degenerate = degenerate && core::select_latent_categorical(enc, prior)[0].index == static_cast<std::size_t>(best);
    for (std::size_t k = 0; k < 7; ++k)
      degenerate = degenerate && std::abs(core::log_q_joint(enc, 0, core::OneHot{k, 7}, prior) - prior.log_prob(k)) <= 1e-12;
  }
  record("single-sample degeneracy", degenerate, "selection follows the prior");

  // finite differences
  double grad_worst = 0.0;
  std::size_t grad_checks = 0, grad_failed = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed)
    for (const auto& r : check::run_gradient_suite(seed)) {
      ++grad_checks;
      grad_worst = std::max(grad_worst, r.max_rel_error);
      if (!r.passed) {
        ++grad_failed;
        note(fmt::format("gradient check {} (seed {}) rel error {:.3g}", r.name, seed, r.max_rel_error));
      }
    }
  record("finite-difference gradients", grad_failed == 0 && grad_worst < 1e-4,
         fmt::format("{} checks, worst rel error {:.3g}", grad_checks, grad_worst));

  const double elapsed = seconds_since(t0);
  const bool fast = elapsed < 60.0;
  return verdict(1, ok && fast, fmt::format("property suite and gradient checks in {:.1f}s (limit 60s)", elapsed));
}

// ---------------------------------------------------------------- criterion 2

double kmeans_error(const Matrix& features, const data::Labels& labels, std::size_t k, std::uint64_t seed) {
  const auto km = eval::kmeans_baseline(features, k, 10, seed);
  return eval::clustering_error(eval::apply_mapping(km.assignment, eval::assign_labels_max_intersection(km.assignment, labels)),
                                labels);
}

train::TrainConfig gmm_config(std::uint64_t seed) {
  train::TrainConfig c;
  c.head = core::CategoricalHead{4};
  c.encoder.hidden = {32};
  c.batch_size = 100;
  c.learning_rate = 2e-4;
  c.epochs = 200;
  c.seed = seed;
  return c;
}

train::TrainingSet gmm_data(std::uint64_t seed) {
  return train::TrainingSet::from_dense(data::synth_gmm(4, 2, 100, 6.0, 1.0, seed));
}

bool criterion_gmm() {
  std::size_t good = 0;
  double slowest = 0.0;
  std::vector<double> errors;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto t0 = Clock::now();
    const auto data = gmm_data(seed);
    train::Trainer t(gmm_config(seed), data);
    train::run(t);
    const double err = eval::error_max_intersection(t.head_outputs(), *data.labels);
    const double secs = seconds_since(t0);
    slowest = std::max(slowest, secs);
    errors.push_back(err);
    if (err <= 2.0) ++good;
    const double km = kmeans_error(data.features, *data.labels, 4, seed);
    note(fmt::format("seed {}: error {:.2f}%  (k-means {:.2f}%)  {:.2f}s", seed, err, km, secs));
  }
  return verdict(2, good >= 8 && slowest < 120.0,
                 fmt::format("GMM error <= 2% on {}/10 seeds (need 8), slowest seed {:.1f}s (limit 120s)", good, slowest));
}

// ---------------------------------------------------------------- criterion 3

struct MnistPaths {
  fs::path images, labels;
};

train::TrainingSet mnist_set(const MnistPaths& p) {
  return train::TrainingSet::from_dense(data::load_idx(p.images, p.labels));
}

bool criterion_regularization(const MnistPaths& paths, std::size_t epochs) {
  const auto data = mnist_set(paths);
  note(fmt::format("MNIST subset: {} samples, {} epochs per run", data.features.rows(), epochs));
  std::vector<double> plain, regular;
  double slowest = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto t0 = Clock::now();
    for (auto reg : {train::Regularization::none, train::Regularization::feature_matching}) {
      train::TrainConfig c;
      c.head = core::CategoricalHead{20};
      c.encoder.hidden = {512, 256};
      c.encoder.activation = nn::ActivationKind::leaky_relu;
      c.batch_size = 100;
      c.learning_rate = 2e-4;
      c.epochs = epochs;
      c.seed = seed;
      c.regularization = reg;
      c.generator.hidden = {256};
      c.generator.noise_dim = 32;
      train::Trainer t(c, data);
      train::run(t);
      const double err = eval::error_max_confidence(t.head_outputs(), *data.labels);
      (reg == train::Regularization::none ? plain : regular).push_back(err);
    }
    const double secs = seconds_since(t0);
    slowest = std::max(slowest, secs);
    note(fmt::format("seed {}: unregularized {:.2f}%  feature matching {:.2f}%  {:.0f}s", seed, plain.back(),
                     regular.back(), secs));
  }
  const auto sp = stats(plain), sr = stats(regular);
  note(fmt::format("unregularized  [{}]  mean {:.3f} std {:.4f}", list(plain), sp.mean, sp.std));
  note(fmt::format("regularized    [{}]  mean {:.3f} std {:.4f}", list(regular), sr.mean, sr.std));
  const bool pass = sr.mean < sp.mean && sp.std > sr.std && slowest <= 1800.0;
  return verdict(3, pass,
                 fmt::format("max-confidence error {:.2f}±{:.2f} regularized vs {:.2f}±{:.2f} unregularized", sr.mean,
                             sr.std, sp.mean, sp.std));
}

// ---------------------------------------------------------------- criterion 4

data::TopicCorpusSpec topic_spec() {
  data::TopicCorpusSpec s;
  s.classes = 4;
  s.vocab_size = 1000;
  s.docs_per_class = 1000;
  s.mean_length = 20;
  s.topic_words = 50;
  s.class_share = 0.12;
  s.nuisance_topics = 6;
  s.nuisance_share = 0.1;
  s.seed = 99;
  return s;
}

bool criterion_text(std::size_t epochs) {
  const auto corpus = data::synth_topic_corpus(topic_spec());
  const auto data = train::TrainingSet::from_counts(corpus);
  note(fmt::format("topic corpus: {} documents, {} words, {} epochs per run", data.features.rows(), data.features.cols(),
                   epochs));
  std::vector<double> ours, baseline;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto t0 = Clock::now();
    train::TrainConfig c;
    c.head = core::CategoricalHead{4};
    c.encoder.hidden = {1000};
    c.batch_size = 100;
    c.learning_rate = 2e-4;
    c.epochs = epochs;
    c.seed = seed;
    c.regularization = train::Regularization::negative_sampling;
    train::Trainer t(c, data);
    train::run(t);
    ours.push_back(100.0 - eval::error_max_intersection(t.head_outputs(), *data.labels));
    baseline.push_back(100.0 - kmeans_error(data.features, *data.labels, 4, seed));
    note(fmt::format("seed {}: DisCoder accuracy {:.2f}%  k-means {:.2f}%  {:.0f}s", seed, ours.back(), baseline.back(),
                     seconds_since(t0)));
  }
  const auto so = stats(ours), sb = stats(baseline);
  const double gap = so.mean - sb.mean;
  return verdict(4, gap >= 5.0,
                 fmt::format("accuracy {:.2f}±{:.2f} vs k-means {:.2f}±{:.2f}, gap {:.2f} points (need 5)", so.mean,
                             so.std, sb.mean, sb.std, gap));
}

// ---------------------------------------------------------------- criterion 5

bool criterion_semi_supervised(std::size_t epochs, std::size_t classes, std::size_t dim) {
  std::vector<double> unsup, semi;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto t0 = Clock::now();
    const auto train_ds = data::synth_gmm(classes, dim, 100, 2.0, 1.0, derive_seed(seed, "acceptance_train"));
    const auto test_ds = data::synth_gmm(classes, dim, 100, 2.0, 1.0, derive_seed(seed, "acceptance_test"));
    const auto data = train::TrainingSet::from_dense(train_ds);
    for (bool labeled : {false, true}) {
      train::TrainConfig c;
      c.head = core::CategoricalHead{classes};
      c.encoder.hidden = {32};
      c.batch_size = 100;
      c.learning_rate = 2e-4;
      c.epochs = epochs;
      c.seed = seed;
      if (labeled) c.semi_supervised_per_class = 10;
      train::Trainer t(c, data);
      train::run(t);
      const Matrix test_post = t.encoder().forward(test_ds.features).head_output;
      double err;
      if (labeled) {
        const auto pred = eval::assignment_from_posteriors(test_post).cluster;
        err = eval::clustering_error(pred, *test_ds.labels);
      } else {
        // clusters mapped to labels with the full training labels
        const auto mapping =
            eval::assign_labels_max_intersection(eval::assignment_from_posteriors(t.head_outputs()), *train_ds.labels);
        err = eval::clustering_error(eval::apply_mapping(eval::assignment_from_posteriors(test_post), mapping),
                                     *test_ds.labels);
      }
      (labeled ? semi : unsup).push_back(err);
    }
    note(fmt::format("seed {}: unsupervised+mapping {:.2f}%  10 labels/class {:.2f}%  {:.1f}s", seed, unsup.back(),
                     semi.back(), seconds_since(t0)));
  }
  const auto su = stats(unsup), ss = stats(semi);
  const double gain = su.mean - ss.mean;
  return verdict(5, gain >= 5.0,
                 fmt::format("test error {:.2f}% with labels vs {:.2f}% without, gain {:.2f} points (need 5)", ss.mean,
                             su.mean, gain));
}

// ---------------------------------------------------------------- criterion 6

bool criterion_probe(const MnistPaths& paths, std::size_t epochs) {
  const auto ds = data::load_idx(paths.images, paths.labels);
  const auto data = train::TrainingSet::from_dense(ds);
  const auto split = data::split_semi_supervised(*ds.labels, 100, 31337);
  const auto train_ids = split.flat_labeled();
  const auto& test_ids = split.unlabeled_ids;

  // lambda chosen by 2-fold cross-validation inside the labeled budget
  std::vector<std::size_t> fold_a, fold_b;
  for (const auto& ids : split.labeled_ids)
    for (std::size_t r = 0; r < ids.size(); ++r) (r % 2 == 0 ? fold_a : fold_b).push_back(ids[r]);

  double best_cv = -1.0, best_lambda = 0.0, best_test = 0.0;
  for (double lambda : {0.1, 0.5, 2.0}) {
    const auto t0 = Clock::now();
    train::TrainConfig c;
    c.head = core::GaussianHead{16, lambda};
    c.encoder.hidden = {512, 256};
    c.encoder.activation = nn::ActivationKind::leaky_relu;
    c.batch_size = 100;
    c.learning_rate = 2e-4;
    c.epochs = epochs;
    c.seed = 5;
    train::Trainer t(c, data);
    train::run(t);
    const Matrix emb = t.embeddings();
    const double cv = 0.5 * (eval::linear_probe(emb, *ds.labels, fold_a, fold_b).test_accuracy +
                             eval::linear_probe(emb, *ds.labels, fold_b, fold_a).test_accuracy);
    const double test = eval::linear_probe(emb, *ds.labels, train_ids, test_ids).test_accuracy;
    note(fmt::format("lambda {}: cross-validated {:.2f}%  held-out {:.2f}%  {:.0f}s", lambda, cv, test,
                     seconds_since(t0)));
    if (cv > best_cv) {
      best_cv = cv;
      best_lambda = lambda;
      best_test = test;
    }
  }
  const double raw = eval::linear_probe(ds.features, *ds.labels, train_ids, test_ids).test_accuracy;
  note(fmt::format("raw pixels: held-out {:.2f}%", raw));
  return verdict(6, best_test > raw,
                 fmt::format("probe accuracy {:.2f}% (lambda {}) vs raw pixels {:.2f}% with 100 labels/class", best_test,
                             best_lambda, raw));
}

// ---------------------------------------------------------------- criterion 7

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool criterion_determinism(const fs::path& work) {
  fs::remove_all(work);
  const std::uint64_t seed = 3;
  const auto data = gmm_data(seed);
  const auto cfg = gmm_config(seed);

  train::Trainer a(cfg, data), b(cfg, data);
  train::run(a, {.out_dir = work / "a"});
  train::run(b, {.out_dir = work / "b"});
  const bool repeat = slurp(work / "a" / "metrics.csv") == slurp(work / "b" / "metrics.csv");
  note(fmt::format("repeat run metrics identical: {}", repeat));

  train::Trainer first(cfg, data);
  const auto r = train::run(first, {.out_dir = work / "c", .checkpoint_every = 100, .stop_after = 100});
  auto resumed = train::Trainer::resume(r.checkpoints.back(), data);
  train::run(resumed, {.out_dir = work / "c"});
  const bool resume = slurp(work / "a" / "metrics.csv") == slurp(work / "c" / "metrics.csv");
  bool params = true;
  for (std::size_t i = 0; i < a.encoder().parameters().size(); ++i)
    params = params && a.encoder().parameters()[i] == resumed.encoder().parameters()[i];
  note(fmt::format("resume at epoch 100 metrics identical: {}  parameters identical: {}", resume, params));
  fs::remove_all(work);
  return verdict(7, repeat && resume && params, "repeat and interrupt/resume reproduce the criterion-2 run bitwise");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance runs"};
  int criterion = 0;
  fs::path data_dir = DISCODER_DATA_DIR;
  fs::path work = fs::temp_directory_path() / "discoder-acceptance";
  std::size_t mnist_epochs = 50, text_epochs = 50, semi_epochs = 200, probe_epochs = 20;
  std::size_t semi_classes = 10, semi_dim = 10;
  app.add_option("--criterion", criterion, "1-7")->required()->check(CLI::Range(1, 7));
  app.add_option("--data-dir", data_dir, "directory holding the MNIST subset");
  app.add_option("--work-dir", work, "scratch directory");
  app.add_option("--mnist-epochs", mnist_epochs);
  app.add_option("--text-epochs", text_epochs);
  app.add_option("--semi-epochs", semi_epochs);
  app.add_option("--semi-classes", semi_classes);
  app.add_option("--semi-dim", semi_dim);
  app.add_option("--probe-epochs", probe_epochs);
  CLI11_PARSE(app, argc, argv);

  const MnistPaths mnist{data_dir / "mnist5k-images-idx3-ubyte.gz", data_dir / "mnist5k-labels-idx1-ubyte.gz"};
  try {
    bool pass = false;
    switch (criterion) {
      case 1: pass = criterion_properties(); break;
      case 2: pass = criterion_gmm(); break;
      case 3: pass = criterion_regularization(mnist, mnist_epochs); break;
      case 4: pass = criterion_text(text_epochs); break;
      case 5: pass = criterion_semi_supervised(semi_epochs, semi_classes, semi_dim); break;
      case 6: pass = criterion_probe(mnist, probe_epochs); break;
      case 7: pass = criterion_determinism(work / "determinism"); break;
    }
    return pass ? 0 : 1;
  } catch (const std::exception& e) {
    verdict(criterion, false, std::string("error: ") + e.what());
    return 1;
  }
}
