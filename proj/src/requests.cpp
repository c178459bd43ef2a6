#include "patternflow/requests.hpp"

#include "patternflow/security.hpp"

namespace patternflow {

const char* outcome_name(CommandOutcome outcome) {
  switch (outcome) {
    case CommandOutcome::ok: return "ok";
    case CommandOutcome::failed: return "failed";
    case CommandOutcome::timedOut: return "timedOut";
    case CommandOutcome::shortCircuited: return "shortCircuited";
    case CommandOutcome::fellBack: return "fellBack";
  }
  return "unknown";
}

void ChannelMonitor::record(const std::string& endpoint,
                            CommandOutcome outcome) {
  std::lock_guard lock(mutex_);
  EndpointReport& r = reports_[endpoint];
  switch (outcome) {
    case CommandOutcome::ok: r.successes++; break;
    case CommandOutcome::failed: r.failures++; break;
    case CommandOutcome::timedOut: r.timeouts++; break;
    case CommandOutcome::shortCircuited: r.shortCircuited++; break;
    case CommandOutcome::fellBack: break;  // recorded as underlying outcome
  }
}

EndpointReport ChannelMonitor::report(const std::string& endpoint) const {
  std::lock_guard lock(mutex_);
  auto it = reports_.find(endpoint);
  return it == reports_.end() ? EndpointReport{} : it->second;
}

CommandResult command_execute(EndpointSimulator& endpoint,
                              const Message& request, Tick timeout,
                              ManualClock& clock, CircuitBreaker* breaker,
                              const Fallback& fallback,
                              ChannelMonitor* monitor) {
  if (timeout == 0) raise("ConfigError", "command timeout must be > 0");

  CommandResult result;
  if (breaker && !breaker->admit()) {
    result.outcome = CommandOutcome::shortCircuited;
    result.latency = 0;
  } else {
    auto inv = endpoint.invoke(request);
    if (inv.outcome == SimOutcome::hang || inv.latency > timeout) {
      clock.advance(timeout);
      result.outcome = CommandOutcome::timedOut;
      result.latency = timeout;
    } else {
      clock.advance(inv.latency);
      result.latency = inv.latency;
      if (inv.outcome == SimOutcome::ok) {
        result.outcome = CommandOutcome::ok;
        result.response = std::move(inv.response);
      } else {
        result.outcome = CommandOutcome::failed;
      }
    }
    if (breaker) breaker->record(result.outcome == CommandOutcome::ok);
  }

  if (monitor) monitor->record(endpoint.name(), result.outcome);

  if (fallback && result.outcome != CommandOutcome::ok) {
    result.response = fallback(request);
    result.outcome = CommandOutcome::fellBack;
  }
  return result;
}

CommandResult failover_request(
    const std::vector<EndpointSimulator*>& endpoints, const Message& request,
    Tick perTryTimeout, ManualClock& clock, ChannelMonitor* monitor,
    AuditLog* audit) {
  if (endpoints.empty())
    raise("ConfigError", "failover needs at least one endpoint");

  std::string attempts;
  for (std::size_t i = 0; i < endpoints.size(); i++) {
    CommandResult result = command_execute(*endpoints[i], request,
                                           perTryTimeout, clock, nullptr,
                                           nullptr, monitor);
    if (audit)
      audit->append("failover-attempt", endpoints[i]->name(),
                    outcome_name(result.outcome));
    if (result.outcome == CommandOutcome::ok) {
      result.endpointIndex = static_cast<int>(i);
      return result;
    }
    if (!attempts.empty()) attempts += ", ";
    attempts += endpoints[i]->name() + std::string(":") +
                outcome_name(result.outcome);
  }
  raise("AllEndpointsFailed", attempts);
}

RequestCollapser::RequestCollapser(Tick windowTicks, ClockPtr clock)
    : windowTicks_(windowTicks), clock_(std::move(clock)) {
  if (windowTicks_ == 0)
    raise("ConfigError", "collapse window must be >= 1 tick");
}

Message RequestCollapser::execute(const std::string& key,
                                  const std::function<Message()>& call) {
  Tick window = clock_->now() / windowTicks_;
  std::shared_future<Message> future;
  std::shared_ptr<std::promise<Message>> promise;
  {
    std::lock_guard lock(mutex_);
    for (auto it = inflight_.begin(); it != inflight_.end();) {
      if (it->first.second < window)
        it = inflight_.erase(it);
      else
        ++it;
    }
    auto it = inflight_.find({key, window});
    if (it != inflight_.end()) {
      future = it->second;
    } else {
      promise = std::make_shared<std::promise<Message>>();
      future = promise->get_future().share();
      inflight_[{key, window}] = future;
      calls_++;
    }
  }
  if (promise) {
    try {
      promise->set_value(call());
    } catch (...) {
      promise->set_exception(std::current_exception());
    }
  }
  return future.get();
}

std::uint64_t RequestCollapser::underlying_calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

RequestCache::RequestCache(Tick ttl, ClockPtr clock)
    : ttl_(ttl), clock_(std::move(clock)) {
  if (ttl_ == 0) raise("ConfigError", "cache ttl must be >= 1 tick");
}

Message RequestCache::execute(const std::string& key,
                              const std::function<Message()>& call) {
  {
    std::lock_guard lock(mutex_);
    lookups_++;
    auto it = entries_.find(key);
    if (it != entries_.end() && clock_->now() - it->second.cachedAt < ttl_) {
      hits_++;
      return it->second.response.with_header("cache.hit", "true");
    }
  }
  Message response = call();  // failures propagate uncached
  {
    std::lock_guard lock(mutex_);
    entries_[key] = CacheEntry{response, clock_->now()};
  }
  return response.with_header("cache.hit", "false");
}

std::uint64_t RequestCache::lookups() const {
  std::lock_guard lock(mutex_);
  return lookups_;
}

std::uint64_t RequestCache::hits() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

void PartitionSet::define(const std::string& name, std::size_t limit) {
  std::lock_guard lock(mutex_);
  partitions_[name] = Partition{limit, 0};
}

void PartitionSet::acquire(const std::string& partition) {
  std::lock_guard lock(mutex_);
  auto it = partitions_.find(partition);
  if (it == partitions_.end())
    raise("UnknownPartition", "no partition '" + partition + "'");
  if (it->second.inFlight >= it->second.limit)
    raise("PartitionSaturated",
          "partition '" + partition + "' is at its limit of " +
              std::to_string(it->second.limit));
  it->second.inFlight++;
}

void PartitionSet::release(const std::string& partition) {
  std::lock_guard lock(mutex_);
  auto it = partitions_.find(partition);
  if (it != partitions_.end() && it->second.inFlight > 0)
    it->second.inFlight--;
}

std::size_t PartitionSet::in_flight(const std::string& partition) const {
  std::lock_guard lock(mutex_);
  auto it = partitions_.find(partition);
  return it == partitions_.end() ? 0 : it->second.inFlight;
}

}  // namespace patternflow
