#pragma once

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "patternflow/clock.hpp"
#include "patternflow/exchange.hpp"
#include "patternflow/flow_model.hpp"
#include "patternflow/stores.hpp"

namespace patternflow {

enum class StatOutcome { success, failure, cancellation };

struct StatRecord {
  std::string component;
  std::uint64_t invocations = 0;
  std::uint64_t successes = 0;
  std::uint64_t failures = 0;
  std::uint64_t cancellations = 0;
  Tick latencyMin = 0;
  Tick latencyMax = 0;
  Tick latencySum = 0;
};

/// Per-component usage counters, optionally persisted through a DataStore so
/// they survive a runtime restart.
class StatsRegistry {
 public:
  explicit StatsRegistry(std::shared_ptr<KeyValueStore> persistence = nullptr);

  void record(const std::string& component, StatOutcome outcome, Tick latency);
  /// Throws UnknownComponent.
  StatRecord query(const std::string& component) const;
  std::vector<std::string> components() const;

 private:
  void persist(const StatRecord& rec);
  void load();

  std::shared_ptr<KeyValueStore> persistence_;
  mutable std::mutex mutex_;
  std::map<std::string, StatRecord> records_;
};

enum class Severity { info, warn, error };

const char* severity_name(Severity severity);

struct Indicator {
  std::string id;
  Severity severity = Severity::info;
  std::string source;
  std::string message;
  Tick raisedAt = 0;
  bool acknowledged = false;
};

/// Persisted operational alerts. Acknowledgment is one-way.
class IndicatorLog {
 public:
  IndicatorLog(std::shared_ptr<KeyValueStore> persistence, ClockPtr clock);

  Indicator raise(Severity severity, const std::string& source,
                  const std::string& message);
  /// Throws UnknownIndicator.
  void acknowledge(const std::string& id);
  std::vector<Indicator> all() const;

 private:
  void persist(const Indicator& ind);

  std::shared_ptr<KeyValueStore> persistence_;
  ClockPtr clock_;
  mutable std::mutex mutex_;
  std::vector<Indicator> indicators_;
};

/// Raises one warn indicator per continuous inactivity episode of a tracked
/// component; a new episode starts when activity is seen again.
class InactivityDetector {
 public:
  InactivityDetector(ClockPtr clock, IndicatorLog& indicators);

  void activity(const std::string& component);
  /// Throws UnknownComponent for untracked components.
  std::optional<Indicator> check(const std::string& component, Tick threshold);

 private:
  struct Tracked {
    Tick lastActivity = 0;
    bool raisedThisEpisode = false;
  };

  ClockPtr clock_;
  IndicatorLog& indicators_;
  std::mutex mutex_;
  std::map<std::string, Tracked> tracked_;
};

/// Bounded ring of recent exchange histories, queryable by message id.
class MessageMonitor {
 public:
  explicit MessageMonitor(std::size_t capacity = 10000);

  void record(const Exchange& exchange);
  /// Throws UnknownMessage.
  std::vector<HistoryEntry> lookup(const std::string& messageId) const;

 private:
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::map<std::string, std::vector<HistoryEntry>> histories_;
  std::deque<std::string> order_;
};

/// Named event queues with retention and subscriber fan-out. Events are
/// plain strings; subscribers get the retained backlog on subscription and
/// every event after that, in publish order.
class SanityBus {
 public:
  explicit SanityBus(std::size_t retention = 1024,
                     std::shared_ptr<KeyValueStore> persistence = nullptr);

  void publish(const std::string& topic, const std::string& event);
  void subscribe(const std::string& topic,
                 std::function<void(const std::string&)> handler);
  std::vector<std::string> retained(const std::string& topic) const;

 private:
  struct Topic {
    std::deque<std::string> retained;
    std::vector<std::function<void(const std::string&)>> subscribers;
    std::uint64_t published = 0;
  };

  std::size_t retention_;
  std::shared_ptr<KeyValueStore> persistence_;
  mutable std::mutex mutex_;
  std::map<std::string, Topic> topics_;
};

/// Static step-type usage counts over parsed flow definitions (walks main
/// steps, branches, nested bodies, subprocesses and exception handlers).
std::map<std::string, int> scenario_content_statistics(
    const std::vector<FlowDefinition>& flows);

/// Cadence-based job runner with persisted lastFiredAt, so a restarted
/// runtime resumes the schedule instead of restarting it. poll() catches up
/// one fire per elapsed cadence slot.
class Scheduler {
 public:
  Scheduler(std::shared_ptr<KeyValueStore> state, ClockPtr clock);

  void register_job(const std::string& name, Tick cadence,
                    std::function<void(Tick)> fn);
  std::size_t poll();
  std::uint64_t fire_count(const std::string& name) const;

 private:
  struct Job {
    Tick cadence = 1;
    std::function<void(Tick)> fn;
    Tick lastFiredAt = 0;
    std::uint64_t fires = 0;
  };

  std::shared_ptr<KeyValueStore> state_;
  ClockPtr clock_;
  mutable std::mutex mutex_;
  std::map<std::string, Job> jobs_;
};

/// Single-holder named leases with expiry, persisted like every other piece
/// of operational state.
class LockManager {
 public:
  LockManager(std::shared_ptr<KeyValueStore> state, ClockPtr clock);

  bool acquire(const std::string& lockName, const std::string& holder,
               Tick lease);
  /// Throws NotHolder when the caller does not hold the lock.
  void release(const std::string& lockName, const std::string& holder);
  std::optional<std::string> holder_of(const std::string& lockName);

 private:
  std::shared_ptr<KeyValueStore> state_;
  ClockPtr clock_;
  std::mutex mutex_;
};

}  // namespace patternflow
