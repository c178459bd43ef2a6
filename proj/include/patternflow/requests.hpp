#pragma once

#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "patternflow/breaker.hpp"
#include "patternflow/clock.hpp"
#include "patternflow/errors.hpp"
#include "patternflow/message.hpp"
#include "patternflow/simulator.hpp"

namespace patternflow {

enum class CommandOutcome { ok, failed, timedOut, shortCircuited, fellBack };

const char* outcome_name(CommandOutcome outcome);

struct CommandResult {
  CommandOutcome outcome = CommandOutcome::ok;
  Tick latency = 0;
  std::optional<Message> response;
  int endpointIndex = -1;  // set by failover_request
};

struct EndpointReport {
  std::uint64_t successes = 0;
  std::uint64_t failures = 0;
  std::uint64_t timeouts = 0;
  std::uint64_t shortCircuited = 0;
};

/// Per-endpoint tallies of command outcomes. Short-circuited requests are
/// counted on their own, not as endpoint failures (the endpoint never saw
/// them).
class ChannelMonitor {
 public:
  void record(const std::string& endpoint, CommandOutcome outcome);
  EndpointReport report(const std::string& endpoint) const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, EndpointReport> reports_;
};

using Fallback = std::function<Message(const Message&)>;

/// Wraps one endpoint call in a command context: breaker admission, timeout,
/// outcome monitoring, optional fallback. Never throws; failures are encoded
/// in the result. The clock advances by the observed latency (capped at the
/// timeout).
CommandResult command_execute(EndpointSimulator& endpoint,
                              const Message& request, Tick timeout,
                              ManualClock& clock,
                              CircuitBreaker* breaker = nullptr,
                              const Fallback& fallback = nullptr,
                              ChannelMonitor* monitor = nullptr);

class AuditLog;

/// Tries endpoints in order until one succeeds; the result carries the
/// serving endpoint's index. Throws AllEndpointsFailed listing every
/// attempt's outcome when none does.
CommandResult failover_request(
    const std::vector<EndpointSimulator*>& endpoints, const Message& request,
    Tick perTryTimeout, ManualClock& clock, ChannelMonitor* monitor = nullptr,
    AuditLog* audit = nullptr);

/// Deduplicates concurrent calls: within one aligned clock window, all
/// callers sharing a collapse key get the response (or failure) of a single
/// underlying call.
class RequestCollapser {
 public:
  RequestCollapser(Tick windowTicks, ClockPtr clock);

  Message execute(const std::string& key,
                  const std::function<Message()>& call);

  std::uint64_t underlying_calls() const;

 private:
  Tick windowTicks_;
  ClockPtr clock_;
  mutable std::mutex mutex_;
  std::map<std::pair<std::string, Tick>, std::shared_future<Message>> inflight_;
  std::uint64_t calls_ = 0;
};

/// Response cache keyed by request key. Successful responses are cached for
/// ttl ticks and replayed with header "cache.hit"="true"; failures are never
/// cached.
class RequestCache {
 public:
  RequestCache(Tick ttl, ClockPtr clock);

  Message execute(const std::string& key,
                  const std::function<Message()>& call);

  std::uint64_t lookups() const;
  std::uint64_t hits() const;

 private:
  struct CacheEntry {
    Message response;
    Tick cachedAt;
  };

  Tick ttl_;
  ClockPtr clock_;
  mutable std::mutex mutex_;
  std::map<std::string, CacheEntry> entries_;
  std::uint64_t lookups_ = 0;
  std::uint64_t hits_ = 0;
};

/// Named bulkheads: each partition admits at most its limit of concurrent
/// executions; excess callers are rejected immediately with
/// PartitionSaturated, leaving other partitions untouched.
class PartitionSet {
 public:
  void define(const std::string& name, std::size_t limit);

  template <typename F>
  auto run(const std::string& partition, F&& fn) {
    acquire(partition);
    struct Release {
      PartitionSet* set;
      const std::string* name;
      ~Release() { set->release(*name); }
    } guard{this, &partition};
    return fn();
  }

  std::size_t in_flight(const std::string& partition) const;

 private:
  void acquire(const std::string& partition);
  void release(const std::string& partition);

  struct Partition {
    std::size_t limit = 0;
    std::size_t inFlight = 0;
  };

  mutable std::mutex mutex_;
  std::map<std::string, Partition> partitions_;
};

}  // namespace patternflow
