#pragma once

#include <cstdint>

namespace kmgl {

/// Selects between the OpenMP kernels and the serial reference path. Both
/// produce bitwise-identical output; the serial path is kept for testing and
/// benchmarking.
enum class Execution { Serial, Parallel };

/// Thread count used by `Execution::Parallel` loops; 0 means the OpenMP default.
void set_num_threads(int threads);
int num_threads();

/// SplitMix64 finalizer. Derived seeds are `mix_seed(seed, stream)` so that
/// per-cluster and per-realization generators never depend on thread layout.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace kmgl
