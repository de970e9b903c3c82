#pragma once

#include "discoder/data/dataset.hpp"

#include <filesystem>

namespace discoder::data {

/// Reads an IDX image file (magic 0x00000803) and label file (0x00000801).
/// Gzip-compressed files are accepted transparently. Pixels are scaled to
/// [0,1] by division by 255.
DenseDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Writes unit-normalized features as IDX bytes (round(255 x)); a ".gz"
/// suffix selects gzip output.
void write_idx(const std::filesystem::path& images, const std::filesystem::path& labels, const DenseDataset& ds,
               std::size_t rows, std::size_t cols);

}  // namespace discoder::data
