#include "discoder/eval/report.hpp"

#include "discoder/eval/assign.hpp"
#include "discoder/errors.hpp"

#include <fmt/format.h>

#include <fstream>

namespace discoder::eval {
namespace {

std::string label_str(std::size_t l) { return l == kUnmapped ? std::string("-") : std::to_string(l); }

}  // namespace

ClusteringReport evaluate_clustering(const Matrix& posteriors, const data::Labels& truth) {
  const auto a = assignment_from_posteriors(posteriors);
  const auto inter = assign_labels_max_intersection(a, truth);
  const auto conf = assign_labels_max_confidence(posteriors, truth);

  ClusteringReport r;
  r.samples = truth.size();
  r.error_intersection = clustering_error(apply_mapping(a, inter), truth);
  r.error_confidence = clustering_error(apply_mapping(a, conf), truth);
  for (std::size_t k = 0; k < a.clusters; ++k) {
    ClusterRow row;
    row.cluster = k;
    row.label_intersection = inter[k];
    row.label_confidence = conf[k];
    std::size_t majority = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
      if (a.cluster[i] == k) {
        ++row.size;
        majority += truth[i] == inter[k];
      }
    row.purity = row.size ? 100.0 * static_cast<double>(majority) / static_cast<double>(row.size) : 0.0;
    r.empty_clusters += row.size == 0;
    r.clusters.push_back(row);
  }
  return r;
}

void write_report_csv(const std::filesystem::path& path, const ClusteringReport& report) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "cluster,size,label_max_intersection,label_max_confidence,purity\n";
  for (const auto& c : report.clusters)
    out << fmt::format("{},{},{},{},{}\n", c.cluster, c.size, label_str(c.label_intersection),
                       label_str(c.label_confidence), c.purity);
  out << fmt::format("overall,{},error_max_intersection={},error_max_confidence={},empty_clusters={}\n",
                     report.samples, report.error_intersection, report.error_confidence, report.empty_clusters);
}

std::string format_report(const ClusteringReport& report) {
  std::string s = fmt::format("{:>7} {:>6} {:>12} {:>12} {:>8}\n", "cluster", "size", "label(inter)", "label(conf)",
                              "purity%");
  for (const auto& c : report.clusters)
    s += fmt::format("{:>7} {:>6} {:>12} {:>12} {:>8.2f}\n", c.cluster, c.size, label_str(c.label_intersection),
                     label_str(c.label_confidence), c.purity);
  s += fmt::format("samples: {}  empty clusters: {}\n", report.samples, report.empty_clusters);
  s += fmt::format("clustering error (max-intersection): {:.3f}%\n", report.error_intersection);
  s += fmt::format("clustering error (max-confidence):   {:.3f}%\n", report.error_confidence);
  return s;
}

}  // namespace discoder::eval
