#pragma once

#include <cstdint>
#include <vector>

#include "esprl/rng.hpp"
#include "esprl/types.hpp"

namespace esprl {

// One stored transition. Observations are model inputs, not raw env states;
// next_mask records which actions were legal in the next state so target
// maxima respect availability.
struct TransitionSample {
  Vector obs;
  int action = 0;
  double reward = 0.0;
  Vector features;
  Vector next_obs;
  bool done = false;
  std::vector<uint8_t> next_mask;
};

// Fixed-capacity ring buffer with uniform sampling (with replacement).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(size_t capacity);

  void push(TransitionSample sample);
  size_t size() const { return data_.size(); }
  size_t capacity() const { return capacity_; }

  const TransitionSample& at(size_t i) const { return data_[i]; }
  std::vector<const TransitionSample*> sample(size_t batch, Rng& rng) const;

 private:
  size_t capacity_;
  size_t next_ = 0;  // overwrite position once full
  std::vector<TransitionSample> data_;
};

}  // namespace esprl
