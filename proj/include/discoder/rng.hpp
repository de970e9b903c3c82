#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace discoder {

using Engine = std::mt19937_64;

/// Seed for a named sub-stream of a master seed. Streams with different
/// names (or indices) are statistically independent, so adding draws to one
/// component never shifts another.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index = 0);

inline Engine make_stream(std::uint64_t master, std::string_view stream, std::uint64_t index = 0) {
  return Engine(derive_seed(master, stream, index));
}

/// Text form of the full engine state; restore_engine() inverts it exactly.
std::string save_engine(const Engine& engine);
Engine restore_engine(const std::string& state);

}  // namespace discoder
