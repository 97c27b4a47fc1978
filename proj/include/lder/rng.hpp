#ifndef LDER_RNG_HPP
#define LDER_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace lder::rng {

// SplitMix64 scrambler, used to derive independent stream seeds so that
// e.g. parameter draws and noise draws never share a stream.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform double in [0,1) from the top 53 bits of the engine output.
// std::uniform_real_distribution is implementation-defined; this mapping is
// bit-identical on every platform.
inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * uniform01(gen);
}

// Standard normal via Box-Muller (cosine branch only, two engine draws per
// call). Stateless so call order alone fixes the stream.
inline double normal(std::mt19937_64& gen) {
  // offset keeps u1 strictly inside (0,1) so log() stays finite
  const double u1 = (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = static_cast<double>(gen() >> 11) * 0x1.0p-53;
  constexpr double two_pi = 6.283185307179586476925286766559;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

}  // namespace lder::rng

#endif  // LDER_RNG_HPP
