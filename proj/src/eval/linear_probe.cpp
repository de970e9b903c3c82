#include "discoder/eval/linear_probe.hpp"

#include "discoder/core/latent.hpp"
#include "discoder/core/objectives.hpp"
#include "discoder/errors.hpp"
#include "discoder/nn/adam.hpp"
#include "discoder/nn/network.hpp"
#include "discoder/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace discoder::eval {
namespace {

Matrix gather(const Matrix& x, const std::vector<std::size_t>& ids) {
  Matrix out(static_cast<Eigen::Index>(ids.size()), x.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(ids[r]));
  return out;
}

double accuracy(const nn::Network& net, const Matrix& x, const data::Labels& labels, const std::vector<std::size_t>& ids) {
  if (ids.empty()) return 0.0;
  const Matrix probs = net.forward(x).head_output;
  std::size_t right = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index arg = 0;
    probs.row(i).maxCoeff(&arg);
    right += static_cast<std::size_t>(arg) == labels[ids[static_cast<std::size_t>(i)]];
  }
  return 100.0 * static_cast<double>(right) / static_cast<double>(ids.size());
}

}  // namespace

ProbeResult linear_probe(const Matrix& embeddings, const data::Labels& labels, const std::vector<std::size_t>& train_ids,
                         const std::vector<std::size_t>& test_ids, const ProbeOptions& options) {
  if (static_cast<std::size_t>(embeddings.rows()) != labels.size())
    throw InputError("linear_probe: embedding and label counts differ");
  if (train_ids.empty()) throw InputError("linear_probe: empty train split");
  std::set<std::size_t> train_classes;
  for (std::size_t i : train_ids) train_classes.insert(labels.at(i));
  if (train_classes.size() < 2) throw InputError("linear_probe: train split contains a single class");
  const std::size_t classes = *std::max_element(labels.begin(), labels.end()) + 1;

  Matrix train = gather(embeddings, train_ids);
  Matrix test = gather(embeddings, test_ids);
  if (options.standardize) {
    const RowVector mean = train.colwise().mean();
    RowVector sd = ((train.rowwise() - mean).array().square().colwise().mean()).sqrt().matrix();
    for (Eigen::Index j = 0; j < sd.size(); ++j)
      if (sd(j) < 1e-12) sd(j) = 1.0;
    train = ((train.rowwise() - mean).array().rowwise() / sd.array()).matrix();
    if (test.rows() > 0) test = ((test.rowwise() - mean).array().rowwise() / sd.array()).matrix();
  }

  nn::Network net({nn::Dense{static_cast<std::size_t>(embeddings.cols()), classes}, nn::SoftmaxHead{classes}});
  net.init_params(derive_seed(options.seed, "probe_init"));
  nn::AdamState adam(nn::AdamConfig{options.learning_rate}, net.parameters());
  Engine rng = make_stream(options.seed, "probe_shuffle");

  std::vector<std::size_t> order(train_ids.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t bs = std::max<std::size_t>(1, options.batch_size);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      Matrix xb(static_cast<Eigen::Index>(end - start), train.cols());
      std::vector<std::size_t> yb;
      for (std::size_t r = start; r < end; ++r) {
        xb.row(static_cast<Eigen::Index>(r - start)) = train.row(static_cast<Eigen::Index>(order[r]));
        yb.push_back(labels[train_ids[order[r]]]);
      }
      const auto fwd = net.forward(xb, true, rng);
      const auto lg = core::supervised_loss(core::CategoricalEncodings::from_logits(fwd.head_input), yb);
      nn::adam_step(net.parameters(), net.backward(lg.grad).params, adam);
    }
  }
  return {accuracy(net, train, labels, train_ids), accuracy(net, test, labels, test_ids)};
}

}  // namespace discoder::eval
