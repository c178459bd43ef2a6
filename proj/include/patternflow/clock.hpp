#pragma once

#include <atomic>
#include <cstdint>
#include <memory>

namespace patternflow {

/// Logical time. One tick has no fixed wall duration; components that need
/// wall-clock semantics (token lifetimes) interpret ticks as seconds.
using Tick = std::uint64_t;

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Tick now() const = 0;
};

/// Test-controllable clock. All time-dependent behaviour in the runtime goes
/// through an injected Clock so schedules, leases, TTLs and breaker timings
/// are reproducible.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(Tick start = 0) : now_(start) {}

  Tick now() const override { return now_.load(std::memory_order_relaxed); }

  void advance(Tick delta) { now_.fetch_add(delta, std::memory_order_relaxed); }

  void set(Tick t) { now_.store(t, std::memory_order_relaxed); }

 private:
  std::atomic<Tick> now_;
};

using ClockPtr = std::shared_ptr<ManualClock>;

}  // namespace patternflow
