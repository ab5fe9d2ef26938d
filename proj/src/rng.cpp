#include "esprl/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace esprl {

namespace {

constexpr uint64_t kGamma = 0x9E3779B97F4A7C15ull;

uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

uint64_t fnv1a(std::string_view s) {
  uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<uint8_t>(c);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

uint64_t Rng::next_u64() {
  counter_ += 1;
  return mix64(seed_ + counter_ * kGamma);
}

double Rng::uniform() {
  // Top 53 bits give a double in [0, 1) on a 2^-53 grid.
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("Rng::uniform: lo > hi");
  return lo + (hi - lo) * uniform();
}

int Rng::uniform_int(int n) {
  if (n <= 0) throw std::invalid_argument("Rng::uniform_int: n must be positive");
  // Lemire multiply-shift; the tiny modulo bias is acceptable here and the
  // mapping is exactly reproducible.
  return static_cast<int>((static_cast<unsigned __int128>(next_u64()) *
                           static_cast<unsigned __int128>(n)) >> 64);
}

double Rng::normal() {
  // Stateless Box-Muller: two draws per sample, no cached spare, so the
  // counter alone captures generator state.
  double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

bool Rng::bernoulli(double p) { return uniform() < p; }

Rng Rng::sub(std::string_view name) const {
  return Rng(mix64(seed_ ^ (fnv1a(name) + kGamma)));
}

}  // namespace esprl
