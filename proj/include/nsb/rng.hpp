#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace nsb {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to decorrelate derived seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stream seed for (base, tag, index). The same triple always yields the same
/// seed, so e.g. all algorithms in replicate r see one environment realization.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index);

/// Uniform double in [0, 1).
double uniform01(Rng& rng);

/// Draws an index from a (not necessarily normalized) non-negative weight vector.
std::size_t sample_index(std::span<const double> weights, Rng& rng);

bool bernoulli(double p, Rng& rng);

}  // namespace nsb
