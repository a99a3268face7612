#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace fcnet {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Independent stream seed for work item `index` of a stochastic stage.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Stage seed from a name, so re-running one stage reuses its stream.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage);

inline Rng make_rng(std::uint64_t seed, std::uint64_t index) {
  return Rng(derive_seed(seed, index));
}

// The standard distributions are implementation-defined; these are not, so
// seeded results are identical across standard libraries.

/// Uniform on [0, 1).
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer on [0, bound).
std::uint64_t uniform_index(Rng& rng, std::uint64_t bound);

double standard_normal(Rng& rng);

template <typename T>
void shuffle(std::vector<T>& values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(rng, i));
    std::swap(values[i - 1], values[j]);
  }
}

}  // namespace fcnet
