#include "levydyn/rng.hpp"

namespace levydyn {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng stream_rng(std::uint64_t seed, StreamTag tag, std::uint64_t index,
               std::uint64_t iteration) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(tag));
  h = splitmix64(h ^ index);
  h = splitmix64(h ^ iteration);
  return Rng(h);
}

double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

double std_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

double gamma_draw(Rng& rng, double shape, double rate) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

double inv_gamma_draw(Rng& rng, double shape, double scale) {
  return 1.0 / gamma_draw(rng, shape, scale);
}

int random_sign(Rng& rng) { return uniform01(rng) < 0.5 ? -1 : 1; }

double floored_uniform(Rng& rng, double floor) {
  double mag = floor + (1.0 - floor) * uniform01(rng);
  if (mag <= floor) mag = 0.5 * (1.0 + floor);
  return random_sign(rng) * mag;
}

}  // namespace levydyn
