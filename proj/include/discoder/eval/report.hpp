#pragma once

#include "discoder/data/dataset.hpp"
#include "discoder/tensor.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace discoder::eval {

struct ClusterRow {
  std::size_t cluster = 0;
  std::size_t size = 0;
  std::size_t label_intersection = 0;  // kUnmapped when empty
  std::size_t label_confidence = 0;    // kUnmapped without posterior mass
  double purity = 0.0;                 // share of the majority class, percent
};

struct ClusteringReport {
  std::vector<ClusterRow> clusters;
  std::size_t samples = 0;
  std::size_t empty_clusters = 0;
  double error_intersection = 0.0;  // percent
  double error_confidence = 0.0;    // percent
};

ClusteringReport evaluate_clustering(const Matrix& posteriors, const data::Labels& truth);

void write_report_csv(const std::filesystem::path& path, const ClusteringReport& report);
std::string format_report(const ClusteringReport& report);

}  // namespace discoder::eval
