#include "fewgen/rng.hpp"

#include <cmath>

#include "fewgen/errors.hpp"

namespace fewgen {

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) {
  // Expand the 64-bit seed into the 256-bit state with a splitmix64 sequence.
  std::uint64_t sm = seed;
  for (auto& word : s_) {
    sm += 0x9E3779B97F4A7C15ull;
    word = mix64(sm);
  }
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;  // all-zero state is invalid
}

static inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

std::uint64_t Rng::next_u64() {
  // xoshiro256++
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double m = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * m;
  has_spare_ = true;
  return u * m;
}

double Rng::normal(double mean, double stddev) {
  return mean + stddev * normal();
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw ContractError("Rng::below requires n >= 1");
  // Rejection sampling: retry while the draw falls in the biased tail.
  std::uint64_t x, r;
  do {
    x = next_u64();
    r = x % n;
  } while (x - r > UINT64_MAX - (n - 1));
  return r;
}

std::uint64_t child_seed(std::uint64_t master, Seed purpose, std::uint64_t index) {
  const std::uint64_t h =
      mix64(master + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(purpose));
  return mix64(h ^ (0xBF58476D1CE4E5B9ull * (index + 1)));
}

}  // namespace fewgen
