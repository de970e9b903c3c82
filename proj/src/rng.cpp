#include "discoder/rng.hpp"

#include "discoder/errors.hpp"

#include <sstream>

namespace discoder {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ fnv1a(stream) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

std::string save_engine(const Engine& engine) {
  std::ostringstream os;
  os << engine;
  return os.str();
}

Engine restore_engine(const std::string& state) {
  std::istringstream is(state);
  Engine e;
  is >> e;
  if (!is) throw FormatError("rng state: could not parse engine state");
  return e;
}

}  // namespace discoder
