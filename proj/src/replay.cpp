#include "esprl/replay.hpp"

#include <stdexcept>

namespace esprl {

ReplayBuffer::ReplayBuffer(size_t capacity) : capacity_(capacity) {
  if (capacity == 0)
    throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  data_.reserve(capacity);
}

void ReplayBuffer::push(TransitionSample sample) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(sample));
    return;
  }
  data_[next_] = std::move(sample);
  next_ = (next_ + 1) % capacity_;
}

std::vector<const TransitionSample*> ReplayBuffer::sample(size_t batch,
                                                          Rng& rng) const {
  if (data_.empty()) throw std::runtime_error("ReplayBuffer: sampling while empty");
  std::vector<const TransitionSample*> out;
  out.reserve(batch);
  for (size_t i = 0; i < batch; ++i)
    out.push_back(&data_[static_cast<size_t>(
        rng.uniform_int(static_cast<int>(data_.size())))]);
  return out;
}

}  // namespace esprl
