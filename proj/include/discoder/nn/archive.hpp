#pragma once

#include "discoder/nn/adam.hpp"
#include "discoder/nn/network.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace discoder::nn {

/// DISC1 file layout:
///
///   "DISC1"                      5 bytes
///   manifest length              uint64, little-endian
///   manifest                     UTF-8 JSON: {"layers": [...], "tensors": [{"name","shape"}...], "meta": {...}}
///   tensor payload               float64 little-endian, row-major, in manifest order
struct NamedTensor {
  std::string name;
  Matrix value;
};

struct Archive {
  nlohmann::json layers = nlohmann::json::array();
  nlohmann::json meta = nlohmann::json::object();
  std::vector<NamedTensor> tensors;
};

inline constexpr char kArchiveMagic[] = "DISC1";

void write_archive(const std::filesystem::path& path, const Archive& archive);
Archive read_archive(const std::filesystem::path& path);

nlohmann::json layers_to_json(const std::vector<LayerSpec>& layers);
std::vector<LayerSpec> layers_from_json(const nlohmann::json& j);

void save_network(const std::filesystem::path& path, const Network& net);
Network load_network(const std::filesystem::path& path);

void save_adam(const std::filesystem::path& path, const AdamState& state);
AdamState load_adam(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace discoder::nn
