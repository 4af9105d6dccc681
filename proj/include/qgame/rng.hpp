#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <random>
#include <stdexcept>

// Counter-based stream derivation plus hand-rolled samplers. The standard
// distributions are implementation-defined, so drawing through these keeps
// observation sets reproducible across standard libraries.
namespace qgame::rng {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Substream seed from a list of identifying parts (seed, day, axis values...).
// Chained splitmix so (a,b) and (b,a) land in unrelated streams.
inline std::uint64_t derive(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t state = 0x8f1bbcdcbfa53e0bULL;
  for (std::uint64_t part : parts) {
    state ^= part + 0x9e3779b97f4a7c15ULL + (state << 6) + (state >> 2);
    (void)splitmix64(state);
  }
  return splitmix64(state);
}

inline std::uint64_t bits_of(double x) {
  std::uint64_t bits;
  std::memcpy(&bits, &x, sizeof bits);
  return bits;
}

inline Engine make_engine(std::uint64_t seed) { return Engine(seed); }

// Uniform on [0,1) with 53 random bits.
inline double uniform01(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

inline double exponential(Engine& eng, double rate) {
  return -std::log1p(-uniform01(eng)) / rate;
}

// Poisson by inversion; chunked so exp(-mean) never underflows.
inline int poisson(Engine& eng, double mean) {
  if (!(mean >= 0.0)) throw std::invalid_argument("poisson: mean must be >= 0");
  int total = 0;
  while (mean > 0.0) {
    const double chunk = mean > 30.0 ? 30.0 : mean;
    mean -= chunk;
    const double u = uniform01(eng);
    double pmf = std::exp(-chunk);
    double cdf = pmf;
    int k = 0;
    while (u >= cdf && k < 10000) {
      ++k;
      pmf *= chunk / k;
      cdf += pmf;
    }
    total += k;
  }
  return total;
}

}  // namespace qgame::rng
