#include "setloc/rng.hpp"

#include <cmath>
#include <numbers>

namespace setloc {

std::uint64_t StreamRng::splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

StreamRng::StreamRng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

StreamRng::StreamRng(std::uint64_t seed, std::initializer_list<std::uint64_t> key) {
  std::uint64_t s = splitmix64(seed);
  for (const auto k : key) s = splitmix64(s ^ splitmix64(k));
  engine_.seed(s);
}

double StreamRng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double StreamRng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace setloc
