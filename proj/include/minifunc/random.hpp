#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace minifunc {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Hash of a master seed together with an ordered list of stream tags
/// (n, k, estimator id, rep index, ...). Same inputs, same seed.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) noexcept;

inline Rng make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
  return Rng(derive_seed(master, tags));
}

}  // namespace minifunc
