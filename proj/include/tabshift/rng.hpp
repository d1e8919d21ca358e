#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tabshift {

// Derives an independent seed for a named sub-stream of a master seed.
// FNV-1a over the stream name, mixed with a splitmix64 finalizer so that
// nearby master seeds do not produce correlated streams.
inline std::uint64_t stream_seed(std::uint64_t master, std::string_view stream) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : stream) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  std::uint64_t z = master ^ h;
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t master, std::string_view stream) {
  return std::mt19937_64(stream_seed(master, stream));
}

}  // namespace tabshift
