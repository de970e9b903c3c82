#include "discoder/data/split.hpp"

#include "discoder/errors.hpp"
#include "discoder/rng.hpp"

#include <algorithm>

namespace discoder::data {

std::size_t SemiSupervisedSplit::labeled_count() const {
  std::size_t n = 0;
  for (const auto& c : labeled_ids) n += c.size();
  return n;
}

std::vector<std::size_t> SemiSupervisedSplit::flat_labeled() const {
  std::vector<std::size_t> out;
  for (const auto& c : labeled_ids) out.insert(out.end(), c.begin(), c.end());
  return out;
}

SemiSupervisedSplit split_semi_supervised(const Labels& labels, std::size_t per_class, std::uint64_t seed) {
  if (labels.empty()) throw InputError("split_semi_supervised: no labels");
  const std::size_t K = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::vector<std::size_t>> members(K);
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);

  Engine rng = make_stream(seed, "split");
  SemiSupervisedSplit split;
  std::vector<bool> labeled(labels.size(), false);
  for (std::size_t k = 0; k < K; ++k) {
    if (members[k].size() < per_class)
      throw InputError("split_semi_supervised: class " + std::to_string(k) + " has " +
                       std::to_string(members[k].size()) + " members, " + std::to_string(per_class) + " requested");
    std::shuffle(members[k].begin(), members[k].end(), rng);
    std::vector<std::size_t> chosen(members[k].begin(), members[k].begin() + static_cast<std::ptrdiff_t>(per_class));
    std::sort(chosen.begin(), chosen.end());
    for (std::size_t i : chosen) labeled[i] = true;
    split.labeled_ids.push_back(std::move(chosen));
  }
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (!labeled[i]) split.unlabeled_ids.push_back(i);
  return split;
}

}  // namespace discoder::data
