#include "patternflow/breaker.hpp"

#include "patternflow/errors.hpp"

namespace patternflow {

CircuitBreaker::CircuitBreaker(BreakerConfig config, ClockPtr clock)
    : config_(config), clock_(std::move(clock)) {
  if (config_.window == 0) raise("ConfigError", "breaker window must be >= 1");
  if (config_.errorThreshold < 0 || config_.errorThreshold > 1)
    raise("ConfigError", "error threshold must be in [0,1]");
}

void CircuitBreaker::open_now() {
  state_ = BreakerState::Open;
  openedAt_ = clock_->now();
  trialInFlight_ = false;
}

bool CircuitBreaker::admit() {
  std::lock_guard lock(mutex_);
  switch (state_) {
    case BreakerState::Closed:
      return true;
    case BreakerState::Open:
      if (clock_->now() - openedAt_ >= config_.openDuration) {
        state_ = BreakerState::HalfOpen;
        trialInFlight_ = true;
        return true;
      }
      return false;
    case BreakerState::HalfOpen:
      if (!trialInFlight_) {
        trialInFlight_ = true;
        return true;
      }
      return false;
  }
  return false;
}

void CircuitBreaker::record(bool success) {
  std::lock_guard lock(mutex_);
  if (state_ == BreakerState::HalfOpen) {
    if (success) {
      state_ = BreakerState::Closed;
      window_.clear();
      trialInFlight_ = false;
    } else {
      open_now();
    }
    return;
  }
  if (state_ == BreakerState::Open) return;  // stale outcome, ignored

  window_.push_back(success);
  if (window_.size() > config_.window) window_.pop_front();
  std::size_t errors = 0;
  for (bool ok : window_)
    if (!ok) errors++;
  double fraction = static_cast<double>(errors) / window_.size();
  if (fraction > config_.errorThreshold) open_now();
}

BreakerState CircuitBreaker::state() const {
  std::lock_guard lock(mutex_);
  return state_;
}

}  // namespace patternflow
