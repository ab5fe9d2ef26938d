#pragma once

#include <cstdint>
#include <string_view>

namespace esprl {

// Counter-based splitmix64 generator. State is a 64-bit seed plus a 64-bit
// draw counter, so it serializes to two integers and produces identical
// streams on every platform (the standard <random> distributions do not
// guarantee that). sub(name) derives an independent stream from the seed
// and the name only, so forked streams never depend on parent draw order.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : seed_(seed) {}

  uint64_t next_u64();

  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  int uniform_int(int n);                // {0, ..., n-1}
  double normal();                       // standard normal, Box-Muller
  bool bernoulli(double p);

  Rng sub(std::string_view name) const;

  uint64_t seed() const { return seed_; }
  uint64_t counter() const { return counter_; }
  void set_counter(uint64_t c) { counter_ = c; }

 private:
  uint64_t seed_ = 0;
  uint64_t counter_ = 0;
};

}  // namespace esprl
