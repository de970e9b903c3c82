#pragma once

#include "discoder/data/dataset.hpp"

#include <filesystem>
#include <string>

namespace discoder::data {

// Sparse text format, one document per line:
//
//   # discoder sparse vocab_size=<V>
//   <label|?> <term>:<weight> <term>:<weight> ...
//
// Lines starting with '#' are comments except the vocab_size header. Without
// the header the vocabulary size is 1 + the largest term index.
SparseDataset read_sparse_text(const std::filesystem::path& path);
void write_sparse_text(const std::filesystem::path& path, const SparseDataset& ds);

// Dense CSV format:
//
//   # discoder dense dim=<d> normalization=<none|unit|symmetric>
//   <label|?>,x1,...,xd
DenseDataset read_dense_csv(const std::filesystem::path& path);
void write_dense_csv(const std::filesystem::path& path, const DenseDataset& ds);

/// 64-bit FNV-1a of the file bytes, as 16 hex digits.
std::string file_fingerprint(const std::filesystem::path& path);

}  // namespace discoder::data
