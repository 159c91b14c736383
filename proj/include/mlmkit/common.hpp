#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mlmkit {

// Exit-code-bearing error categories (see tools/: 1 usage, 2 data, 3 numeric).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr std::string_view kToolVersion = "0.1.0";

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Deterministic stream derivation: every consumer of randomness seeds its own
// engine from mix64 of (seed, role, indices) so no mutable RNG state needs to
// survive a checkpoint.
inline uint64_t mix64(uint64_t a, uint64_t b) { return splitmix64(a ^ splitmix64(b)); }
inline uint64_t mix64(uint64_t a, uint64_t b, uint64_t c) {
  return mix64(mix64(a, b), c);
}

inline uint64_t fnv1a64(std::string_view bytes, uint64_t seed = 0xCBF29CE484222325ull) {
  uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

std::string read_file(const std::string& path);           // throws DataError
void write_file(const std::string& path, std::string_view content);
std::string hex64(uint64_t v);

}  // namespace mlmkit
