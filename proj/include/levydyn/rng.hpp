#pragma once

#include <cstdint>
#include <random>

namespace levydyn {

using Rng = std::mt19937_64;

// Stream tags keep per-phase draws disjoint.
enum class StreamTag : std::uint64_t {
  block = 1,
  theta = 2,
  enhance = 3,
  phi = 4,
  zeta = 5,
  predict = 6,
  init = 7,
  simulate = 8,
  user = 9,
};

std::uint64_t splitmix64(std::uint64_t x);

// Independent engine for (seed, tag, index, iteration); the result does not
// depend on which worker evaluates it.
Rng stream_rng(std::uint64_t seed, StreamTag tag, std::uint64_t index,
               std::uint64_t iteration);

double uniform01(Rng& rng);
double std_normal(Rng& rng);
double gamma_draw(Rng& rng, double shape, double rate);
double inv_gamma_draw(Rng& rng, double shape, double scale);
int random_sign(Rng& rng);
// Uniform on (-1, 1) restricted to |e| > floor.
double floored_uniform(Rng& rng, double floor);

}  // namespace levydyn
