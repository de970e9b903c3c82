#include "discoder/train/config.hpp"

#include "discoder/errors.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace discoder::train {

using nlohmann::json;

std::string to_string(Regularization r) {
  switch (r) {
    case Regularization::none: return "none";
    case Regularization::negative_sampling: return "negative_sampling";
    case Regularization::class_conditioned: return "class_conditioned";
    case Regularization::feature_matching: return "feature_matching";
  }
  return "none";
}

std::string to_string(SelectionScope s) { return s == SelectionScope::batch ? "batch" : "dataset"; }

namespace {

Regularization parse_regularization(const std::string& field, const std::string& s) {
  for (auto r : {Regularization::none, Regularization::negative_sampling, Regularization::class_conditioned,
                 Regularization::feature_matching})
    if (to_string(r) == s) return r;
  throw ConfigError(field, "unknown regularization \"" + s +
                               "\" (expected none, negative_sampling, class_conditioned or feature_matching)");
}

// Reads fields from one JSON object and rejects keys it never asked for.
class Fields {
 public:
  Fields(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) throw ConfigError(prefix_.empty() ? "<root>" : prefix_, "expected an object");
  }

  std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  template <class T>
  void read(const std::string& key, T& out) {
    if (const json* v = find(key)) out = convert<T>(key, *v);
  }

  template <class T>
  void read(const std::string& key, std::optional<T>& out) {
    if (const json* v = find(key)) out = convert<T>(key, *v);
  }

  template <class T>
  T convert(const std::string& key, const json& v) const {
    if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        throw ConfigError(path(key), "expected a non-negative integer, got " + v.dump());
      return v.get<T>();
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError(path(key), "expected a number, got " + v.dump());
      return v.get<double>();
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(path(key), "expected true or false, got " + v.dump());
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(path(key), "expected a string, got " + v.dump());
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
      if (!v.is_array()) throw ConfigError(path(key), "expected an array of integers, got " + v.dump());
      std::vector<std::size_t> out;
      for (const auto& e : v) out.push_back(convert<std::size_t>(key, e));
      return out;
    } else {
      static_assert(sizeof(T) == 0, "unsupported field type");
    }
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError(path(key), "unknown key");
  }

 private:
  const json& j_;
  std::string prefix_;
  std::set<std::string> seen_;
};

nn::ActivationKind activation(const std::string& field, const std::string& name) {
  try {
    return nn::parse_activation(name);
  } catch (const InputError&) {
    throw ConfigError(field, "unknown activation \"" + name + "\" (expected relu, leaky_relu, tanh or sigmoid)");
  }
}

json opt_json(const auto& o) { return o ? json(*o) : json(nullptr); }

}  // namespace

std::size_t TrainConfig::latent_width() const {
  if (const auto* c = std::get_if<core::CategoricalHead>(&head)) return c->classes;
  return std::get<core::GaussianHead>(head).dim;
}

void TrainConfig::validate() const {
  if (const auto* c = std::get_if<core::CategoricalHead>(&head)) {
    if (c->classes < 2) throw ConfigError("head.classes", "must be at least 2");
  } else {
    const auto& g = std::get<core::GaussianHead>(head);
    if (g.dim < 1) throw ConfigError("head.dim", "must be at least 1");
    if (!(g.lambda > 0.0) || !std::isfinite(g.lambda)) throw ConfigError("head.lambda", "must be positive and finite");
    if (prior_radius && !(*prior_radius > 0.0)) throw ConfigError("head.prior_radius", "must be positive");
  }
  if (batch_size < 2) throw ConfigError("batch_size", "must be at least 2, got " + std::to_string(batch_size));
  if (epochs < 1) throw ConfigError("epochs", "must be at least 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate", "must be positive");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0)) throw ConfigError("adam.beta1", "must lie in (0, 1)");
  if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0)) throw ConfigError("adam.beta2", "must lie in (0, 1)");
  if (!(adam_epsilon > 0.0)) throw ConfigError("adam.epsilon", "must be positive");
  if (!(encoder.dropout >= 0.0 && encoder.dropout < 1.0)) throw ConfigError("encoder.dropout", "must lie in [0, 1)");
  for (std::size_t h : encoder.hidden)
    if (h == 0) throw ConfigError("encoder.hidden", "layer widths must be positive");
  for (std::size_t h : generator.hidden)
    if (h == 0) throw ConfigError("generator.hidden", "layer widths must be positive");
  if (generator.noise_dim < 1) throw ConfigError("generator.noise_dim", "must be at least 1");
  if (generator.learning_rate && !(*generator.learning_rate > 0.0))
    throw ConfigError("generator.learning_rate", "must be positive");
  if (regularization != Regularization::none && !categorical())
    throw ConfigError("regularization", "requires a categorical head");
  if (semi_supervised_per_class) {
    if (!categorical()) throw ConfigError("semi_supervised_per_class", "requires a categorical head");
    if (*semi_supervised_per_class < 1) throw ConfigError("semi_supervised_per_class", "must be at least 1");
  }
  if (queue_capacity < 1) throw ConfigError("queue_capacity", "must be at least 1");
  if (gaussian_step_size && !(*gaussian_step_size > 0.0))
    throw ConfigError("gaussian_step_size", "must be positive");
  for (auto [name, w] : {std::pair{"weights.joint", weights.joint}, std::pair{"weights.supervised", weights.supervised},
                         std::pair{"weights.confusion", weights.confusion}})
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError(name, "must be non-negative and finite");
  if (!(early_stop.tolerance >= 0.0)) throw ConfigError("early_stop.tolerance", "must be non-negative");
  if (dataset) {
    const auto& d = *dataset;
    if (d.format == "idx") {
      if (d.images.empty()) throw ConfigError("dataset.images", "required for format idx");
      if (d.labels.empty()) throw ConfigError("dataset.labels", "required for format idx");
    } else if (d.format == "dense" || d.format == "sparse") {
      if (d.path.empty()) throw ConfigError("dataset.path", "required for format " + d.format);
    } else {
      throw ConfigError("dataset.format", "unknown format \"" + d.format + "\" (expected idx, dense or sparse)");
    }
    if (d.limit && *d.limit < 1) throw ConfigError("dataset.limit", "must be at least 1");
    if (d.normalization && d.format == "sparse")
      throw ConfigError("dataset.normalization", "not applicable to sparse data");
  }
}

json to_json(const TrainConfig& c) {
  json j;
  if (const auto* cat = std::get_if<core::CategoricalHead>(&c.head)) {
    j["head"] = {{"kind", "categorical"}, {"classes", cat->classes}};
  } else {
    const auto& g = std::get<core::GaussianHead>(c.head);
    j["head"] = {{"kind", "gaussian"}, {"dim", g.dim}, {"lambda", g.lambda}, {"prior_radius", opt_json(c.prior_radius)}};
  }
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["adam"] = {{"beta1", c.adam_beta1}, {"beta2", c.adam_beta2}, {"epsilon", c.adam_epsilon}};
  j["epochs"] = c.epochs;
  j["seed"] = c.seed;
  j["regularization"] = to_string(c.regularization);
  j["semi_supervised_per_class"] = opt_json(c.semi_supervised_per_class);
  j["encoder"] = {{"hidden", c.encoder.hidden},
                  {"activation", nn::to_string(c.encoder.activation)},
                  {"slope", c.encoder.slope},
                  {"dropout", c.encoder.dropout}};
  j["generator"] = {{"hidden", c.generator.hidden},
                    {"noise_dim", c.generator.noise_dim},
                    {"output", nn::to_string(c.generator.output)},
                    {"learning_rate", opt_json(c.generator.learning_rate)}};
  j["queue_capacity"] = c.queue_capacity;
  j["gaussian_steps"] = c.gaussian_steps;
  j["gaussian_step_size"] = opt_json(c.gaussian_step_size);
  j["weights"] = {{"joint", c.weights.joint}, {"supervised", c.weights.supervised}, {"confusion", c.weights.confusion}};
  j["selection_scope"] = to_string(c.selection_scope);
  j["checkpoint_every"] = c.checkpoint_every;
  j["early_stop"] = {{"patience", c.early_stop.patience}, {"tolerance", c.early_stop.tolerance}};
  if (c.dataset) {
    const auto& d = *c.dataset;
    j["dataset"] = {{"format", d.format},
                    {"path", d.path.string()},
                    {"images", d.images.string()},
                    {"labels", d.labels.string()},
                    {"normalization", d.normalization ? json(data::to_string(*d.normalization)) : json(nullptr)},
                    {"tfidf", d.tfidf},
                    {"limit", opt_json(d.limit)}};
  } else {
    j["dataset"] = nullptr;
  }
  return j;
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  Fields root(j, "");

  if (const json* h = root.find("head")) {
    Fields f(*h, "head");
    std::string kind = "categorical";
    f.read("kind", kind);
    if (kind == "categorical") {
      core::CategoricalHead head{10};
      f.read("classes", head.classes);
      c.head = head;
    } else if (kind == "gaussian") {
      core::GaussianHead head{16, 1.0};
      f.read("dim", head.dim);
      f.read("lambda", head.lambda);
      f.read("prior_radius", c.prior_radius);
      c.head = head;
    } else {
      throw ConfigError("head.kind", "unknown head \"" + kind + "\" (expected categorical or gaussian)");
    }
    f.finish();
  }
  root.read("batch_size", c.batch_size);
  root.read("learning_rate", c.learning_rate);
  if (const json* a = root.find("adam")) {
    Fields f(*a, "adam");
    f.read("beta1", c.adam_beta1);
    f.read("beta2", c.adam_beta2);
    f.read("epsilon", c.adam_epsilon);
    f.finish();
  }
  root.read("epochs", c.epochs);
  root.read("seed", c.seed);
  if (const json* r = root.find("regularization"))
    c.regularization = parse_regularization("regularization", root.convert<std::string>("regularization", *r));
  root.read("semi_supervised_per_class", c.semi_supervised_per_class);
  if (const json* e = root.find("encoder")) {
    Fields f(*e, "encoder");
    f.read("hidden", c.encoder.hidden);
    if (const json* a = f.find("activation"))
      c.encoder.activation = activation("encoder.activation", f.convert<std::string>("activation", *a));
    f.read("slope", c.encoder.slope);
    f.read("dropout", c.encoder.dropout);
    f.finish();
  }
  if (const json* g = root.find("generator")) {
    Fields f(*g, "generator");
    f.read("hidden", c.generator.hidden);
    f.read("noise_dim", c.generator.noise_dim);
    if (const json* a = f.find("output"))
      c.generator.output = activation("generator.output", f.convert<std::string>("output", *a));
    f.read("learning_rate", c.generator.learning_rate);
    f.finish();
  }
  root.read("queue_capacity", c.queue_capacity);
  root.read("gaussian_steps", c.gaussian_steps);
  root.read("gaussian_step_size", c.gaussian_step_size);
  if (const json* w = root.find("weights")) {
    Fields f(*w, "weights");
    f.read("joint", c.weights.joint);
    f.read("supervised", c.weights.supervised);
    f.read("confusion", c.weights.confusion);
    f.finish();
  }
  if (const json* s = root.find("selection_scope")) {
    const auto v = root.convert<std::string>("selection_scope", *s);
    if (v == "batch") c.selection_scope = SelectionScope::batch;
    else if (v == "dataset") c.selection_scope = SelectionScope::dataset;
    else throw ConfigError("selection_scope", "expected batch or dataset, got \"" + v + "\"");
  }
  root.read("checkpoint_every", c.checkpoint_every);
  if (const json* e = root.find("early_stop")) {
    Fields f(*e, "early_stop");
    f.read("patience", c.early_stop.patience);
    f.read("tolerance", c.early_stop.tolerance);
    f.finish();
  }
  if (const json* d = root.find("dataset")) {
    Fields f(*d, "dataset");
    DatasetSpec spec;
    std::string s;
    f.read("format", spec.format);
    if (s.clear(), f.read("path", s), !s.empty()) spec.path = s;
    if (s.clear(), f.read("images", s), !s.empty()) spec.images = s;
    if (s.clear(), f.read("labels", s), !s.empty()) spec.labels = s;
    if (const json* n = f.find("normalization")) {
      try {
        spec.normalization = data::parse_normalization(f.convert<std::string>("normalization", *n));
      } catch (const InputError& e) {
        throw ConfigError("dataset.normalization", e.what());
      }
    }
    f.read("tfidf", spec.tfidf);
    f.read("limit", spec.limit);
    f.finish();
    c.dataset = spec;
  }
  root.finish();
  c.validate();
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(assignment, "override must have the form key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError(key, "empty path component");
    if (node->is_null()) *node = json::object();
    if (!node->is_object()) throw ConfigError(key, "cannot descend into a non-object value");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

std::vector<nn::LayerSpec> encoder_layers(const TrainConfig& config, std::size_t input_dim) {
  return nn::mlp(input_dim, config.encoder.hidden, config.latent_width(),
                 nn::Activation{config.encoder.activation, config.encoder.slope}, config.categorical(),
                 config.encoder.dropout);
}

}  // namespace discoder::train
