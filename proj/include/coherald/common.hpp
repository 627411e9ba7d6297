// Shared error types and small numeric helpers used across the library.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#define COHERALD_VERSION "0.1.0"

namespace coherald {

// Requested window does not contain the field: mass was lost at the edges.
class truncation_error : public std::runtime_error {
  public:
    explicit truncation_error(const std::string& what) : std::runtime_error(what) {}
};

// Computational window or resolution too small for the requested solve.
class window_error : public std::runtime_error {
  public:
    explicit window_error(const std::string& what) : std::runtime_error(what) {}
};

// Configuration file failed schema validation; message names the key.
class validation_error : public std::runtime_error {
  public:
    explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

// SplitMix64 finalizer. Used to derive independent per-realization seeds
// from (master_seed, index) so that parallel execution order cannot change
// the random streams.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace coherald
