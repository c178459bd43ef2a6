#pragma once

#include <deque>
#include <mutex>

#include "patternflow/clock.hpp"

namespace patternflow {

enum class BreakerState { Closed, Open, HalfOpen };

struct BreakerConfig {
  std::size_t window = 20;       // count-based rolling window
  double errorThreshold = 0.5;   // open when error fraction exceeds this
  Tick openDuration = 50;
};

/// Count-based circuit breaker. Evaluated on every recorded outcome over the
/// current (possibly partial) window; Open rejects everything until
/// openDuration has elapsed, then exactly one half-open trial decides
/// between Closed (window cleared) and Open (timer reset).
class CircuitBreaker {
 public:
  CircuitBreaker(BreakerConfig config, ClockPtr clock);

  /// True when a request may proceed. Transitions Open->HalfOpen once the
  /// open period has elapsed; in HalfOpen only the first caller gets through
  /// until its outcome is recorded.
  bool admit();

  /// Feeds an outcome back. Must be called once per admitted request.
  void record(bool success);

  BreakerState state() const;

 private:
  void open_now();

  BreakerConfig config_;
  ClockPtr clock_;
  mutable std::mutex mutex_;
  BreakerState state_ = BreakerState::Closed;
  std::deque<bool> window_;
  Tick openedAt_ = 0;
  bool trialInFlight_ = false;
};

}  // namespace patternflow
