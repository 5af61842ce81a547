#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace beliefsum {

// splitmix64 step; used to derive well-separated substream seeds.
std::uint64_t splitmix64(std::uint64_t& state);

// Independent generator for (seed, stream_index). Trial i sees the same
// stream regardless of how many trials run or in which order.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream_index);

// Uniform double in [0, 1). Uses the top 53 bits of one 64-bit draw so the
// mapping is fixed across standard library implementations.
double uniform_unit(std::mt19937_64& rng);

// Index in [0, weights.size()) with probability proportional to weights.
std::size_t sample_discrete(std::mt19937_64& rng, const std::vector<double>& weights);

// Poisson draw by CDF inversion (sum of two half-rate draws for large rates,
// where e^-rate underflows). Deterministic across platforms, unlike
// std::poisson_distribution.
int sample_poisson(std::mt19937_64& rng, double rate);

}  // namespace beliefsum
