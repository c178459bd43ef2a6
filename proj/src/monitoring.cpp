#include "patternflow/monitoring.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "patternflow/errors.hpp"

namespace patternflow {

using nlohmann::json;

StatsRegistry::StatsRegistry(std::shared_ptr<KeyValueStore> persistence)
    : persistence_(std::move(persistence)) {
  if (persistence_) load();
}

void StatsRegistry::load() {
  for (const auto& key : persistence_->query("")) {
    auto doc = json::parse(to_string(persistence_->get(key)));
    StatRecord rec;
    rec.component = key;
    rec.invocations = doc["invocations"].get<std::uint64_t>();
    rec.successes = doc["successes"].get<std::uint64_t>();
    rec.failures = doc["failures"].get<std::uint64_t>();
    rec.cancellations = doc["cancellations"].get<std::uint64_t>();
    rec.latencyMin = doc["latencyMin"].get<Tick>();
    rec.latencyMax = doc["latencyMax"].get<Tick>();
    rec.latencySum = doc["latencySum"].get<Tick>();
    records_[key] = std::move(rec);
  }
}

void StatsRegistry::persist(const StatRecord& rec) {
  if (!persistence_) return;
  json doc{{"invocations", rec.invocations}, {"successes", rec.successes},
           {"failures", rec.failures},       {"cancellations", rec.cancellations},
           {"latencyMin", rec.latencyMin},   {"latencyMax", rec.latencyMax},
           {"latencySum", rec.latencySum}};
  persistence_->put(rec.component, to_bytes(doc.dump()));
}

void StatsRegistry::record(const std::string& component, StatOutcome outcome,
                           Tick latency) {
  std::lock_guard lock(mutex_);
  StatRecord& rec = records_[component];
  if (rec.component.empty()) rec.component = component;
  if (rec.invocations == 0) {
    rec.latencyMin = latency;
    rec.latencyMax = latency;
  } else {
    rec.latencyMin = std::min(rec.latencyMin, latency);
    rec.latencyMax = std::max(rec.latencyMax, latency);
  }
  rec.invocations++;
  rec.latencySum += latency;
  switch (outcome) {
    case StatOutcome::success: rec.successes++; break;
    case StatOutcome::failure: rec.failures++; break;
    case StatOutcome::cancellation: rec.cancellations++; break;
  }
  persist(rec);
}

StatRecord StatsRegistry::query(const std::string& component) const {
  std::lock_guard lock(mutex_);
  auto it = records_.find(component);
  if (it == records_.end())
    raise("UnknownComponent", "no statistics for '" + component + "'");
  return it->second;
}

std::vector<std::string> StatsRegistry::components() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [name, _] : records_) out.push_back(name);
  return out;
}

const char* severity_name(Severity severity) {
  switch (severity) {
    case Severity::info: return "info";
    case Severity::warn: return "warn";
    case Severity::error: return "error";
  }
  return "unknown";
}

namespace {

Severity severity_from(const std::string& name) {
  if (name == "info") return Severity::info;
  if (name == "warn") return Severity::warn;
  if (name == "error") return Severity::error;
  raise("ParseError", "unknown severity '" + name + "'");
}

std::string indicator_key(std::uint64_t n) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "ind-%08llu",
                static_cast<unsigned long long>(n));
  return buf;
}

}  // namespace

IndicatorLog::IndicatorLog(std::shared_ptr<KeyValueStore> persistence,
                           ClockPtr clock)
    : persistence_(std::move(persistence)), clock_(std::move(clock)) {
  if (!persistence_) return;
  for (const auto& key : persistence_->query("")) {
    auto doc = json::parse(to_string(persistence_->get(key)));
    Indicator ind;
    ind.id = key;
    ind.severity = severity_from(doc["severity"].get<std::string>());
    ind.source = doc["source"].get<std::string>();
    ind.message = doc["message"].get<std::string>();
    ind.raisedAt = doc["raisedAt"].get<Tick>();
    ind.acknowledged = doc["acknowledged"].get<bool>();
    indicators_.push_back(std::move(ind));
  }
}

void IndicatorLog::persist(const Indicator& ind) {
  if (!persistence_) return;
  json doc{{"severity", severity_name(ind.severity)},
           {"source", ind.source},
           {"message", ind.message},
           {"raisedAt", ind.raisedAt},
           {"acknowledged", ind.acknowledged}};
  persistence_->put(ind.id, to_bytes(doc.dump()));
}

Indicator IndicatorLog::raise(Severity severity, const std::string& source,
                              const std::string& message) {
  std::lock_guard lock(mutex_);
  Indicator ind;
  ind.id = indicator_key(indicators_.size());
  ind.severity = severity;
  ind.source = source;
  ind.message = message;
  ind.raisedAt = clock_->now();
  indicators_.push_back(ind);
  persist(ind);
  return ind;
}

void IndicatorLog::acknowledge(const std::string& id) {
  std::lock_guard lock(mutex_);
  for (Indicator& ind : indicators_) {
    if (ind.id == id) {
      ind.acknowledged = true;
      persist(ind);
      return;
    }
  }
  patternflow::raise("UnknownIndicator", "no indicator '" + id + "'");
}

std::vector<Indicator> IndicatorLog::all() const {
  std::lock_guard lock(mutex_);
  return indicators_;
}

InactivityDetector::InactivityDetector(ClockPtr clock, IndicatorLog& indicators)
    : clock_(std::move(clock)), indicators_(indicators) {}

void InactivityDetector::activity(const std::string& component) {
  std::lock_guard lock(mutex_);
  tracked_[component] = Tracked{clock_->now(), false};
}

std::optional<Indicator> InactivityDetector::check(const std::string& component,
                                                   Tick threshold) {
  std::lock_guard lock(mutex_);
  auto it = tracked_.find(component);
  if (it == tracked_.end())
    raise("UnknownComponent", "component '" + component + "' is not tracked");
  Tracked& t = it->second;
  if (clock_->now() - t.lastActivity <= threshold || t.raisedThisEpisode)
    return std::nullopt;
  t.raisedThisEpisode = true;
  return indicators_.raise(Severity::warn, component,
                           "no activity for more than " +
                               std::to_string(threshold) + " ticks");
}

MessageMonitor::MessageMonitor(std::size_t capacity) : capacity_(capacity) {}

void MessageMonitor::record(const Exchange& exchange) {
  std::lock_guard lock(mutex_);
  const std::string& id = exchange.message().id();
  if (!histories_.count(id)) {
    order_.push_back(id);
    if (order_.size() > capacity_) {
      histories_.erase(order_.front());
      order_.pop_front();
    }
  }
  histories_[id] = exchange.history();
}

std::vector<HistoryEntry> MessageMonitor::lookup(
    const std::string& messageId) const {
  std::lock_guard lock(mutex_);
  auto it = histories_.find(messageId);
  if (it == histories_.end())
    raise("UnknownMessage", "no history for message '" + messageId + "'");
  return it->second;
}

SanityBus::SanityBus(std::size_t retention,
                     std::shared_ptr<KeyValueStore> persistence)
    : retention_(retention), persistence_(std::move(persistence)) {}

void SanityBus::publish(const std::string& topic, const std::string& event) {
  std::vector<std::function<void(const std::string&)>> subscribers;
  {
    std::lock_guard lock(mutex_);
    Topic& t = topics_[topic];
    t.retained.push_back(event);
    if (t.retained.size() > retention_) t.retained.pop_front();
    if (persistence_) {
      char key[64];
      std::snprintf(key, sizeof key, "%s:%012llu", topic.c_str(),
                    static_cast<unsigned long long>(t.published));
      persistence_->put(key, to_bytes(event));
    }
    t.published++;
    subscribers = t.subscribers;
  }
  for (auto& s : subscribers) s(event);
}

void SanityBus::subscribe(const std::string& topic,
                          std::function<void(const std::string&)> handler) {
  std::deque<std::string> backlog;
  {
    std::lock_guard lock(mutex_);
    Topic& t = topics_[topic];
    backlog = t.retained;
    t.subscribers.push_back(handler);
  }
  for (const auto& event : backlog) handler(event);
}

std::vector<std::string> SanityBus::retained(const std::string& topic) const {
  std::lock_guard lock(mutex_);
  auto it = topics_.find(topic);
  if (it == topics_.end()) return {};
  return {it->second.retained.begin(), it->second.retained.end()};
}

namespace {

void count_steps(const std::vector<Step>& steps,
                 std::map<std::string, int>& counts) {
  for (const Step& step : steps) {
    counts[step.type]++;
    count_steps(step.steps, counts);
    for (const Branch& branch : step.branches)
      count_steps(branch.steps, counts);
  }
}

}  // namespace

std::map<std::string, int> scenario_content_statistics(
    const std::vector<FlowDefinition>& flows) {
  std::map<std::string, int> counts;
  for (const FlowDefinition& flow : flows) {
    count_steps(flow.steps, counts);
    for (const auto& [_, sub] : flow.subprocesses) {
      count_steps(sub.steps, counts);
      for (const auto& handler : sub.onException)
        count_steps(handler.steps, counts);
    }
    for (const auto& handler : flow.onException)
      count_steps(handler.steps, counts);
  }
  return counts;
}

Scheduler::Scheduler(std::shared_ptr<KeyValueStore> state, ClockPtr clock)
    : state_(std::move(state)), clock_(std::move(clock)) {}

void Scheduler::register_job(const std::string& name, Tick cadence,
                             std::function<void(Tick)> fn) {
  if (cadence == 0) raise("ConfigError", "cadence must be >= 1 tick");
  std::lock_guard lock(mutex_);
  Job job;
  job.cadence = cadence;
  job.fn = std::move(fn);
  if (state_) {
    try {
      job.lastFiredAt = std::stoull(to_string(state_->get("sched:" + name)));
    } catch (const PatternError& e) {
      if (e.kind() != "KeyNotFound") throw;
    }
  }
  jobs_[name] = std::move(job);
}

std::size_t Scheduler::poll() {
  std::lock_guard lock(mutex_);
  Tick now = clock_->now();
  std::size_t fired = 0;
  for (auto& [name, job] : jobs_) {
    while (job.lastFiredAt + job.cadence <= now) {
      job.lastFiredAt += job.cadence;
      job.fires++;
      if (state_)
        state_->put("sched:" + name, to_bytes(std::to_string(job.lastFiredAt)));
      if (job.fn) job.fn(job.lastFiredAt);
      fired++;
    }
  }
  return fired;
}

std::uint64_t Scheduler::fire_count(const std::string& name) const {
  std::lock_guard lock(mutex_);
  auto it = jobs_.find(name);
  return it == jobs_.end() ? 0 : it->second.fires;
}

LockManager::LockManager(std::shared_ptr<KeyValueStore> state, ClockPtr clock)
    : state_(std::move(state)), clock_(std::move(clock)) {}

bool LockManager::acquire(const std::string& lockName,
                          const std::string& holder, Tick lease) {
  if (lease == 0) raise("ConfigError", "lease must be >= 1 tick");
  std::lock_guard lock(mutex_);
  Tick now = clock_->now();
  try {
    auto doc = json::parse(to_string(state_->get("lock:" + lockName)));
    Tick acquiredAt = doc["acquiredAt"].get<Tick>();
    Tick leaseLen = doc["lease"].get<Tick>();
    std::string current = doc["holder"].get<std::string>();
    bool live = now < acquiredAt + leaseLen;
    if (live && current != holder) return false;
  } catch (const PatternError& e) {
    if (e.kind() != "KeyNotFound") throw;
  }
  json doc{{"holder", holder}, {"acquiredAt", now}, {"lease", lease}};
  state_->put("lock:" + lockName, to_bytes(doc.dump()));
  return true;
}

void LockManager::release(const std::string& lockName,
                          const std::string& holder) {
  std::lock_guard lock(mutex_);
  try {
    auto doc = json::parse(to_string(state_->get("lock:" + lockName)));
    if (doc["holder"].get<std::string>() != holder)
      raise("NotHolder", "'" + holder + "' does not hold '" + lockName + "'");
    state_->remove("lock:" + lockName);
  } catch (const PatternError& e) {
    if (e.kind() == "KeyNotFound")
      raise("NotHolder", "lock '" + lockName + "' is not held");
    throw;
  }
}

std::optional<std::string> LockManager::holder_of(const std::string& lockName) {
  std::lock_guard lock(mutex_);
  try {
    auto doc = json::parse(to_string(state_->get("lock:" + lockName)));
    if (clock_->now() >= doc["acquiredAt"].get<Tick>() + doc["lease"].get<Tick>())
      return std::nullopt;
    return doc["holder"].get<std::string>();
  } catch (const PatternError& e) {
    if (e.kind() == "KeyNotFound") return std::nullopt;
    throw;
  }
}

}  // namespace patternflow
