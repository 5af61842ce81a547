#include "beliefsum/rng.hpp"

#include <cmath>
#include <vector>

#include "beliefsum/errors.hpp"

namespace beliefsum {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream_index) {
  std::uint64_t state = seed ^ (0x6a09e667f3bcc909ULL + stream_index * 0x9e3779b97f4a7c15ULL);
  const std::uint64_t a = splitmix64(state);
  const std::uint64_t b = splitmix64(state);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t sample_discrete(std::mt19937_64& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw InvalidParameter("sample_discrete: nonpositive total weight");
  double u = uniform_unit(rng) * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u < 0.0) return i;
  }
  return weights.size() - 1;
}

int sample_poisson(std::mt19937_64& rng, double rate) {
  if (!std::isfinite(rate) || rate < 0.0)
    throw InvalidParameter("sample_poisson: rate must be nonnegative and finite");
  if (rate == 0.0) return 0;
  // e^-rate must not underflow for the inversion walk; split otherwise.
  if (rate > 500.0)
    return sample_poisson(rng, rate / 2.0) + sample_poisson(rng, rate / 2.0);

  const double u = uniform_unit(rng);
  double p = std::exp(-rate);
  double cdf = p;
  int k = 0;
  // Expected iterations ~ rate; bounded hard in case u lands in the far tail.
  const int k_max = static_cast<int>(rate + 60.0 * std::sqrt(rate) + 60.0);
  while (u >= cdf && k < k_max) {
    ++k;
    p *= rate / k;
    cdf += p;
  }
  return k;
}

}  // namespace beliefsum
