#include "discoder/train/trainer.hpp"

#include "discoder/core/objectives.hpp"
#include "discoder/data/formats.hpp"
#include "discoder/data/idx.hpp"
#include "discoder/errors.hpp"
#include "discoder/eval/assign.hpp"
#include "discoder/nn/archive.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace discoder::train {

namespace fs = std::filesystem;
using nlohmann::json;

TrainingSet TrainingSet::from_dense(const data::DenseDataset& ds) {
  ds.validate();
  TrainingSet t;
  t.features = ds.features;
  t.labels = ds.labels;
  return t;
}

TrainingSet TrainingSet::from_counts(const data::SparseDataset& counts) {
  counts.validate();
  auto tfidf = data::tf_idf(counts);
  TrainingSet t;
  t.features = tfidf.data.to_dense();
  t.labels = counts.labels;
  t.sampler = reg::NegativeSampler::from_corpus(counts);
  t.tfidf = std::move(tfidf.model);
  return t;
}

namespace {

void require_file(const fs::path& p, const std::string& field) {
  if (!fs::exists(p)) throw ConfigError(field, "no such file: " + p.string());
}

data::DenseDataset normalize(data::DenseDataset ds, const std::optional<data::Normalization>& target) {
  if (!target || *target == ds.normalization) return ds;
  if (*target == data::Normalization::symmetric && ds.normalization == data::Normalization::unit)
    return data::to_symmetric(std::move(ds));
  throw InputError("dataset: cannot convert " + data::to_string(ds.normalization) + " features to " +
                   data::to_string(*target));
}

}  // namespace

TrainingSet load_training_set(const DatasetSpec& spec) {
  if (spec.format == "sparse") {
    require_file(spec.path, "dataset.path");
    auto counts = data::read_sparse_text(spec.path);
    if (spec.limit && *spec.limit < counts.size()) {
      counts.docs.resize(*spec.limit);
      if (counts.labels) counts.labels->resize(*spec.limit);
    }
    if (spec.tfidf) return TrainingSet::from_counts(counts);
    TrainingSet t;
    t.features = counts.to_dense();
    t.labels = counts.labels;
    return t;
  }
  data::DenseDataset ds;
  if (spec.format == "idx") {
    require_file(spec.images, "dataset.images");
    require_file(spec.labels, "dataset.labels");
    ds = data::load_idx(spec.images, spec.labels);
  } else {
    require_file(spec.path, "dataset.path");
    ds = data::read_dense_csv(spec.path);
  }
  if (spec.limit && *spec.limit < ds.size()) {
    std::vector<std::size_t> ids(*spec.limit);
    std::iota(ids.begin(), ids.end(), 0);
    ds = data::subset(ds, ids);
  }
  return TrainingSet::from_dense(normalize(std::move(ds), spec.normalization));
}

namespace {

void check_finite(double value, const char* what, std::size_t epoch) {
  if (!std::isfinite(value))
    throw NumericalError(fmt::format("non-finite {} ({}) during epoch {}", what, value, epoch + 1));
}

nn::ForwardResult checked(nn::ForwardResult fwd, std::size_t epoch) {
  if (!all_finite(fwd.head_input))
    throw NumericalError(fmt::format("non-finite encoder output during epoch {}", epoch + 1));
  return fwd;
}

nn::AdamConfig adam_config(const TrainConfig& c, double lr) { return {lr, c.adam_beta1, c.adam_beta2, c.adam_epsilon}; }

std::optional<reg::Generator> make_generator(const TrainConfig& c, std::size_t data_dim) {
  if (c.regularization != Regularization::class_conditioned && c.regularization != Regularization::feature_matching)
    return std::nullopt;
  reg::GeneratorSpec spec;
  spec.noise_dim = c.generator.noise_dim;
  spec.hidden = c.generator.hidden;
  spec.data_dim = data_dim;
  spec.classes = c.latent_width();
  spec.output_activation = c.generator.output;
  spec.mode = c.regularization == Regularization::class_conditioned ? reg::GeneratorMode::class_conditioned
                                                                     : reg::GeneratorMode::feature_matching;
  reg::Generator g(spec);
  g.network().init_params(derive_seed(c.seed, "init", 1));
  return g;
}

nn::Network make_encoder(const TrainConfig& c, std::size_t input_dim) {
  nn::Network net(encoder_layers(c, input_dim));
  net.init_params(derive_seed(c.seed, "init", 0));
  return net;
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
std::optional<double> opt_double(const json& j) { return j.is_null() ? std::nullopt : std::optional<double>(j.get<double>()); }

json metrics_to_json(const EpochMetrics& m) {
  return {{"epoch", m.epoch},
          {"joint_loss", m.joint_loss},
          {"supervised_loss", opt(m.supervised_loss)},
          {"confusion_loss", opt(m.confusion_loss)},
          {"generator_loss", opt(m.generator_loss)},
          {"clustering_error", opt(m.clustering_error)}};
}

EpochMetrics metrics_from_json(const json& j) {
  EpochMetrics m;
  m.epoch = j.at("epoch").get<std::size_t>();
  m.joint_loss = j.at("joint_loss").get<double>();
  m.supervised_loss = opt_double(j.at("supervised_loss"));
  m.confusion_loss = opt_double(j.at("confusion_loss"));
  m.generator_loss = opt_double(j.at("generator_loss"));
  m.clustering_error = opt_double(j.at("clustering_error"));
  return m;
}

// Running mean of an optional per-step metric.
struct Mean {
  double sum = 0.0;
  std::size_t count = 0;
  void add(const std::optional<double>& v) {
    if (v) {
      sum += *v;
      ++count;
    }
  }
  std::optional<double> value() const { return count ? std::optional<double>(sum / static_cast<double>(count)) : std::nullopt; }
};

}  // namespace

Trainer::Trainer(TrainConfig config, const TrainingSet& data)
    : config_(std::move(config)),
      data_(&data),
      encoder_(make_encoder(config_, static_cast<std::size_t>(data.features.cols()))),
      generator_(make_generator(config_, static_cast<std::size_t>(data.features.cols()))),
      queue_(config_.queue_capacity),
      dropout_rng_(make_stream(config_.seed, "dropout")),
      noise_rng_(make_stream(config_.seed, "noise")),
      sampler_rng_(make_stream(config_.seed, "sampler")) {
  config_.validate();
  const auto n = static_cast<std::size_t>(data.features.rows());
  if (n == 0) throw InputError("training set is empty");
  if (data.labels && data.labels->size() != n) throw InputError("training set: label count differs from sample count");
  if (!all_finite(data.features)) throw InputError("training set contains non-finite features");

  adam_joint_ = nn::AdamState(adam_config(config_, config_.learning_rate), encoder_.parameters());
  adam_supervised_ = adam_joint_;
  adam_confusion_ = adam_joint_;
  if (generator_)
    adam_generator_ = nn::AdamState(adam_config(config_, config_.generator.learning_rate.value_or(config_.learning_rate)),
                                    generator_->network().parameters());

  if (config_.categorical()) {
    categorical_prior_ = core::CategoricalPrior::uniform(config_.latent_width());
  } else {
    const std::size_t m = config_.latent_width();
    sphere_prior_ = config_.prior_radius ? core::SpherePrior(m, *config_.prior_radius) : core::SpherePrior(m);
  }

  if (config_.regularization == Regularization::negative_sampling && (!data.sampler || !data.tfidf))
    throw ConfigError("regularization", "negative_sampling needs a count corpus with tf-idf features");

  if (config_.semi_supervised_per_class) {
    if (!data.labels) throw ConfigError("semi_supervised_per_class", "the training set has no labels");
    if (data.labels->size() && *std::max_element(data.labels->begin(), data.labels->end()) >= config_.latent_width())
      throw ConfigError("semi_supervised_per_class", "labels exceed the number of latent classes");
    const auto split =
        data::split_semi_supervised(*data.labels, *config_.semi_supervised_per_class, derive_seed(config_.seed, "split"));
    labeled_pool_ = split.flat_labeled();
    Engine order = make_stream(config_.seed, "labeled_order");
    std::shuffle(labeled_pool_.begin(), labeled_pool_.end(), order);
  }
}

Matrix Trainer::gather(std::span<const std::size_t> ids) const {
  Matrix x(static_cast<Eigen::Index>(ids.size()), data_->features.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= static_cast<std::size_t>(data_->features.rows())) throw InputError("train_step: sample id out of range");
    x.row(static_cast<Eigen::Index>(r)) = data_->features.row(static_cast<Eigen::Index>(ids[r]));
  }
  return x;
}

std::vector<std::size_t> Trainer::next_labeled_batch(std::size_t size) {
  std::vector<std::size_t> ids;
  ids.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    ids.push_back(labeled_pool_[labeled_cursor_]);
    labeled_cursor_ = (labeled_cursor_ + 1) % labeled_pool_.size();
  }
  return ids;
}

void Trainer::adopt_schedule(const TrainConfig& config) {
  auto strip = [](const TrainConfig& c) {
    auto j = to_json(c);
    for (const char* key : {"epochs", "checkpoint_every", "early_stop", "dataset"}) j.erase(key);
    return j;
  };
  const auto ours = strip(config_), theirs = strip(config);
  if (ours != theirs) {
    const auto diff = nlohmann::json::diff(ours, theirs);
    throw ConfigError(diff.empty() ? "config" : diff.front().at("path").get<std::string>().substr(1),
                      "differs from the checkpoint being resumed");
  }
  if (config.epochs < epoch_)
    throw ConfigError("epochs", fmt::format("{} is below the {} epochs already trained", config.epochs, epoch_));
  config_.epochs = config.epochs;
  config_.checkpoint_every = config.checkpoint_every;
  config_.early_stop = config.early_stop;
}

void Trainer::refresh_normalizer() {
  const auto enc = core::CategoricalEncodings::from_logits(checked(encoder_.forward(data_->features), epoch_).head_input);
  dataset_log_sums_ = core::column_log_sums(enc.log_probs());
}

double Trainer::update_encoder(const Matrix& head_grad, nn::AdamState& adam, double weight) {
  if (weight == 0.0) return 0.0;
  const auto grads = encoder_.backward(head_grad);
  nn::adam_step(encoder_.parameters(), grads.params, adam, weight);
  return weight;
}

double Trainer::confusion_step(const Matrix& fakes) {
  const auto fwd = checked(encoder_.forward(fakes, true, dropout_rng_), epoch_);
  const auto lg = core::confusion_loss(core::CategoricalEncodings::from_logits(fwd.head_input), *categorical_prior_);
  const double mean = lg.loss / static_cast<double>(fakes.rows());
  check_finite(mean, "confusion loss", epoch_);
  update_encoder(lg.grad, adam_confusion_, config_.weights.confusion);
  return mean;
}

StepMetrics Trainer::train_step(std::span<const std::size_t> batch_ids) {
  if (batch_ids.empty()) throw InputError("train_step: empty batch");
  StepMetrics m;
  const Matrix x = gather(batch_ids);
  const auto b = static_cast<double>(batch_ids.size());

  std::vector<core::OneHot> z;
  if (config_.categorical()) {
    // forward, latent selection, encoder update on the joint term
    const auto fwd = checked(encoder_.forward(x, true, dropout_rng_), epoch_);
    const auto enc = core::CategoricalEncodings::from_logits(fwd.head_input);
    z = config_.selection_scope == SelectionScope::dataset && dataset_log_sums_
            ? core::select_latent_categorical(enc, *dataset_log_sums_, *categorical_prior_)
            : core::select_latent_categorical(enc, *categorical_prior_);
    const auto lg = core::encoder_loss_categorical(enc, z);
    m.joint_loss = lg.loss / b;
    check_finite(m.joint_loss, "joint loss", epoch_);
    update_encoder(lg.grad, adam_joint_, config_.weights.joint);
  } else {
    const auto& head = std::get<core::GaussianHead>(config_.head);
    const auto fwd = checked(encoder_.forward(x, true, dropout_rng_), epoch_);
    const Matrix& phi = fwd.head_input;
    queue_.push_rows(phi);
    const Matrix population = queue_.as_matrix();
    core::GaussianSelectionOptions opts;
    opts.steps = config_.gaussian_steps;
    opts.step_size = config_.gaussian_step_size;
    Matrix assigned(phi.rows(), phi.cols());
    for (Eigen::Index i = 0; i < phi.rows(); ++i)
      assigned.row(i) =
          core::select_latent_gaussian(phi.row(i).transpose(), population, head.lambda, *sphere_prior_, opts).z.transpose();
    const auto lg = core::encoder_loss_gaussian(phi, assigned, head.lambda);
    m.joint_loss = lg.loss / b;
    check_finite(m.joint_loss, "joint loss", epoch_);
    update_encoder(lg.grad, adam_joint_, config_.weights.joint);
  }

  // labeled batch
  if (!labeled_pool_.empty() && config_.weights.supervised > 0.0) {
    const auto ids = next_labeled_batch(batch_ids.size());
    std::vector<std::size_t> y;
    y.reserve(ids.size());
    for (std::size_t id : ids) y.push_back((*data_->labels)[id]);
    const auto fwd = checked(encoder_.forward(gather(ids), true, dropout_rng_), epoch_);
    const auto lg = core::supervised_loss(core::CategoricalEncodings::from_logits(fwd.head_input), y);
    m.supervised_loss = lg.loss;
    check_finite(lg.loss, "supervised loss", epoch_);
    update_encoder(lg.grad, adam_supervised_, config_.weights.supervised);
  }

  // one regularization branch
  switch (config_.regularization) {
    case Regularization::none:
      break;
    case Regularization::class_conditioned: {
      const Matrix fakes = generator_->generate_class_conditioned(z, noise_rng_, true);
      m.confusion_loss = confusion_step(fakes);
      const auto gl = reg::generator_loss_through_encoder(encoder_, fakes, z, dropout_rng_);
      check_finite(gl.loss, "generator loss", epoch_);
      m.generator_loss = gl.loss;
      nn::adam_step(generator_->network().parameters(), generator_->network().backward(gl.grad).params, adam_generator_);
      break;
    }
    case Regularization::feature_matching: {
      const Matrix fakes = generator_->generate(batch_ids.size(), noise_rng_, true);
      m.confusion_loss = confusion_step(fakes);
      const Matrix real = encoder_.forward(x, true, dropout_rng_).penultimate;
      const auto fm = reg::feature_matching_through_encoder(encoder_, real, fakes, dropout_rng_);
      check_finite(fm.loss, "generator loss", epoch_);
      m.generator_loss = fm.loss;
      nn::adam_step(generator_->network().parameters(), generator_->network().backward(fm.grad).params, adam_generator_);
      break;
    }
    case Regularization::negative_sampling: {
      const auto docs = data_->sampler->sample(batch_ids.size(), sampler_rng_);
      m.confusion_loss = confusion_step(data_->tfidf->transform(docs).to_dense());
      break;
    }
  }
  encoder_.clear_tape();
  return m;
}

EpochMetrics Trainer::train_epoch() {
  if (finished()) throw StateError("train_epoch: epoch budget already exhausted");
  const auto n = static_cast<std::size_t>(data_->features.rows());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Engine shuffle = make_stream(config_.seed, "shuffle", epoch_);
  std::shuffle(order.begin(), order.end(), shuffle);

  if (config_.categorical() && config_.selection_scope == SelectionScope::dataset) refresh_normalizer();

  double joint = 0.0;
  Mean supervised, confusion, generator;
  const std::size_t b = config_.batch_size;
  for (std::size_t start = 0; start < n; start += b) {
    const std::size_t len = std::min(b, n - start);
    const auto m = train_step(std::span<const std::size_t>(order.data() + start, len));
    joint += m.joint_loss * static_cast<double>(len);
    supervised.add(m.supervised_loss);
    confusion.add(m.confusion_loss);
    generator.add(m.generator_loss);
  }
  ++epoch_;

  EpochMetrics em;
  em.epoch = epoch_;
  em.joint_loss = joint / static_cast<double>(n);
  em.supervised_loss = supervised.value();
  em.confusion_loss = confusion.value();
  em.generator_loss = generator.value();
  if (config_.categorical() && data_->labels) em.clustering_error = eval::error_max_intersection(head_outputs(), *data_->labels);
  history_.push_back(em);
  return em;
}

Matrix Trainer::head_outputs() const { return encoder_.forward(data_->features).head_output; }

Matrix Trainer::embeddings() const { return encoder_.forward(data_->features).penultimate; }

void Trainer::save_checkpoint(const fs::path& dir) const {
  fs::path tmp = dir;
  tmp += ".partial";
  fs::remove_all(tmp);
  fs::create_directories(tmp);

  nn::save_network(tmp / "encoder.disc", encoder_);
  nn::save_adam(tmp / "adam_joint.disc", adam_joint_);
  nn::save_adam(tmp / "adam_supervised.disc", adam_supervised_);
  nn::save_adam(tmp / "adam_confusion.disc", adam_confusion_);
  if (generator_) {
    nn::save_network(tmp / "generator.disc", generator_->network());
    nn::save_adam(tmp / "adam_generator.disc", adam_generator_);
  }
  nn::Archive q;
  q.meta = {{"kind", "recent_queue"}, {"capacity", queue_.capacity()}};
  Matrix entries = queue_.as_matrix();
  if (queue_.empty()) entries.resize(0, static_cast<Eigen::Index>(config_.latent_width()));
  q.tensors.push_back({"queue", std::move(entries)});
  nn::write_archive(tmp / "queue.disc", q);

  json state;
  state["format"] = "discoder-checkpoint";
  state["version"] = 1;
  state["epoch"] = epoch_;
  state["config"] = to_json(config_);
  state["rng"] = {{"dropout", save_engine(dropout_rng_)},
                  {"noise", save_engine(noise_rng_)},
                  {"sampler", save_engine(sampler_rng_)}};
  state["labeled_pool"] = labeled_pool_;
  state["labeled_cursor"] = labeled_cursor_;
  json hist = json::array();
  for (const auto& m : history_) hist.push_back(metrics_to_json(m));
  state["history"] = hist;
  nn::write_file_atomic(tmp / "state.json", state.dump(2) + "\n");

  fs::remove_all(dir);
  fs::rename(tmp, dir);
}

Trainer Trainer::resume(const fs::path& dir, const TrainingSet& data) {
  std::ifstream in(dir / "state.json");
  if (!in) throw InputError("resume: cannot open " + (dir / "state.json").string());
  json state;
  try {
    state = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError((dir / "state.json").string() + ": " + e.what());
  }
  if (state.value("format", "") != "discoder-checkpoint")
    throw FormatError((dir / "state.json").string() + ": format: not a discoder checkpoint");

  Trainer t(config_from_json(state.at("config")), data);
  auto encoder = nn::load_network(dir / "encoder.disc");
  if (encoder.layers().size() != t.encoder_.layers().size() || encoder.input_dim() != t.encoder_.input_dim() ||
      encoder.output_dim() != t.encoder_.output_dim())
    throw FormatError((dir / "encoder.disc").string() + ": architecture differs from the checkpointed config");
  t.encoder_ = std::move(encoder);
  t.adam_joint_ = nn::load_adam(dir / "adam_joint.disc");
  t.adam_supervised_ = nn::load_adam(dir / "adam_supervised.disc");
  t.adam_confusion_ = nn::load_adam(dir / "adam_confusion.disc");
  if (t.generator_) {
    t.generator_ = reg::Generator(nn::load_network(dir / "generator.disc"), t.generator_->noise_dim(),
                                  t.generator_->classes(), t.generator_->mode());
    t.adam_generator_ = nn::load_adam(dir / "adam_generator.disc");
  }
  const auto q = nn::read_archive(dir / "queue.disc");
  if (q.tensors.size() != 1) throw FormatError((dir / "queue.disc").string() + ": expected one tensor");
  t.queue_.push_rows(q.tensors[0].value);

  t.epoch_ = state.at("epoch").get<std::size_t>();
  t.dropout_rng_ = restore_engine(state.at("rng").at("dropout").get<std::string>());
  t.noise_rng_ = restore_engine(state.at("rng").at("noise").get<std::string>());
  t.sampler_rng_ = restore_engine(state.at("rng").at("sampler").get<std::string>());
  t.labeled_pool_ = state.at("labeled_pool").get<std::vector<std::size_t>>();
  t.labeled_cursor_ = state.at("labeled_cursor").get<std::size_t>();
  if (!t.labeled_pool_.empty() && t.labeled_cursor_ >= t.labeled_pool_.size())
    throw FormatError((dir / "state.json").string() + ": labeled_cursor: out of range");
  for (const auto& m : state.at("history")) t.history_.push_back(metrics_from_json(m));
  return t;
}

std::string checkpoint_name(std::size_t epoch) { return fmt::format("epoch-{:04d}", epoch); }

void write_metrics_csv(const fs::path& path, const std::vector<EpochMetrics>& history) {
  auto cell = [](const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); };
  std::string out = "epoch,joint_loss,supervised_loss,confusion_loss,generator_loss,clustering_error\n";
  for (const auto& m : history)
    out += fmt::format("{},{},{},{},{},{}\n", m.epoch, m.joint_loss, cell(m.supervised_loss), cell(m.confusion_loss),
                       cell(m.generator_loss), cell(m.clustering_error));
  nn::write_file_atomic(path, out);
}

namespace {

// Consecutive trailing epochs whose joint loss moved by less than `tolerance` relative.
std::size_t stable_run(const std::vector<EpochMetrics>& h, double tolerance) {
  std::size_t run = 0;
  for (std::size_t i = h.size(); i >= 2; --i) {
    const double prev = h[i - 2].joint_loss;
    const double rel = std::abs(h[i - 1].joint_loss - prev) / std::max(std::abs(prev), 1e-300);
    if (rel >= tolerance) break;
    ++run;
  }
  return run;
}

}  // namespace

RunResult run(Trainer& trainer, const RunOptions& options) {
  RunResult result;
  const std::size_t every = options.checkpoint_every.value_or(trainer.config().checkpoint_every);
  const auto& stop = trainer.config().early_stop;
  std::optional<fs::path> last_good;
  if (!options.out_dir.empty()) {
    fs::create_directories(options.out_dir / "checkpoints");
    const auto current = options.out_dir / "checkpoints" / checkpoint_name(trainer.epoch());
    if (trainer.epoch() > 0 && fs::exists(current / "state.json")) last_good = current;
  }

  while (!trainer.finished()) {
    EpochMetrics em;
    try {
      em = trainer.train_epoch();
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) +
                           "; last good checkpoint: " + (last_good ? last_good->string() : std::string("none")));
    }
    if (options.on_epoch) options.on_epoch(em);
    if (stop.patience > 0 && stable_run(trainer.history(), stop.tolerance) >= stop.patience) result.stopped_early = true;
    const bool last = trainer.finished() || result.stopped_early ||
                      (options.stop_after && trainer.epoch() >= *options.stop_after);
    if (!options.out_dir.empty()) {
      write_metrics_csv(options.out_dir / "metrics.csv", trainer.history());
      if ((every > 0 && trainer.epoch() % every == 0) || last) {
        const auto dir = options.out_dir / "checkpoints" / checkpoint_name(trainer.epoch());
        trainer.save_checkpoint(dir);
        result.checkpoints.push_back(dir);
        last_good = dir;
      }
    }
    if (last) break;
  }
  return result;
}

}  // namespace discoder::train
