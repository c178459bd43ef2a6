#include "patternflow/qos.hpp"

#include <algorithm>

#include "patternflow/errors.hpp"

namespace patternflow {

QosLevel qos_level_from(const std::string& name) {
  if (name == "bestEffort") return QosLevel::bestEffort;
  if (name == "atLeastOnce") return QosLevel::atLeastOnce;
  if (name == "atMostOnce") return QosLevel::atMostOnce;
  if (name == "exactlyOnce") return QosLevel::exactlyOnce;
  if (name == "exactlyOnceInOrder") return QosLevel::exactlyOnceInOrder;
  raise("ConfigError", "unknown QoS level '" + name + "'");
}

const char* qos_level_name(QosLevel level) {
  switch (level) {
    case QosLevel::bestEffort: return "bestEffort";
    case QosLevel::atLeastOnce: return "atLeastOnce";
    case QosLevel::atMostOnce: return "atMostOnce";
    case QosLevel::exactlyOnce: return "exactlyOnce";
    case QosLevel::exactlyOnceInOrder: return "exactlyOnceInOrder";
  }
  return "unknown";
}

Json DeliveryReport::to_json() const {
  Json doc;
  doc["delivered"] = delivered;
  doc["duplicatesProcessed"] = duplicatesProcessed;
  doc["lost"] = lost;
  doc["orderViolations"] = orderViolations;
  Json per = Json::object();
  for (const auto& [name, c] : perEndpoint) {
    per[name] = Json{{"received", c.received},
                     {"succeeded", c.succeeded},
                     {"failed", c.failed}};
  }
  doc["perEndpoint"] = per;
  return doc;
}

CommutativeReceiver::CommutativeReceiver(std::size_t gapCapacity,
                                         std::uint64_t start)
    : gapCapacity_(gapCapacity), nextExpected_(start) {}

std::vector<Message> CommutativeReceiver::push(std::uint64_t seq, Message m) {
  if (seq < nextExpected_) return {};  // already released
  if (seq > nextExpected_) {
    if (seq - nextExpected_ > gapCapacity_)
      raise("BufferOverflow",
            "sequence " + std::to_string(seq) + " is more than " +
                std::to_string(gapCapacity_) + " ahead of expected " +
                std::to_string(nextExpected_));
    pending_.emplace(seq, std::move(m));
    return {};
  }
  std::vector<Message> released;
  released.push_back(std::move(m));
  nextExpected_++;
  for (auto it = pending_.begin();
       it != pending_.end() && it->first == nextExpected_;
       it = pending_.erase(it)) {
    released.push_back(std::move(it->second));
    nextExpected_++;
  }
  return released;
}

namespace {

struct ConsumerState {
  const QosConfig* cfg;
  std::map<std::string, std::uint64_t> processedCount;
  std::uint64_t maxSeqSeen = 0;
  std::uint64_t orderViolations = 0;
  std::optional<CommutativeReceiver> buffer;

  explicit ConsumerState(const QosConfig& c) : cfg(&c) {
    if (c.level == QosLevel::exactlyOnceInOrder)
      buffer.emplace(c.gapCapacity);
  }

  std::uint64_t sequence_of(const Message& m) const {
    if (cfg->sequenceHeader.empty()) return 0;
    auto h = m.header(cfg->sequenceHeader);
    if (!h) return 0;
    return std::stoull(*h);
  }

  void process(const Message& m) {
    processedCount[m.id()]++;
    std::uint64_t seq = sequence_of(m);
    if (seq != 0) {
      if (seq < maxSeqSeen) orderViolations++;
      maxSeqSeen = std::max(maxSeqSeen, seq);
    }
  }

  /// One delivery reaching the consumer stage. Returns true when the
  /// consumer acknowledges (duplicates are acknowledged too).
  bool deliver(const Message& m) {
    bool dedup = cfg->level == QosLevel::exactlyOnce ||
                 cfg->level == QosLevel::exactlyOnceInOrder;
    if (dedup) {
      std::string key = "dedup:" + m.id();
      try {
        cfg->dedupStore->get(key);
        return true;  // seen before: acknowledge, do not reprocess
      } catch (const PatternError& e) {
        if (e.kind() != "KeyNotFound") throw;
      }
      PutOptions dedupOpts;
      dedupOpts.ttl = cfg->dedupTtl;
      cfg->dedupStore->put(key, to_bytes("1"), dedupOpts);
    }
    if (buffer) {
      for (const Message& released : buffer->push(sequence_of(m), m))
        process(released);
    } else {
      process(m);
    }
    return true;
  }
};

void validate_config(const QosConfig& cfg) {
  bool dedup = cfg.level == QosLevel::exactlyOnce ||
               cfg.level == QosLevel::exactlyOnceInOrder;
  if (dedup && !cfg.dedupStore)
    raise("ConfigError", std::string(qos_level_name(cfg.level)) +
                             " requires a dedup store");
  if (cfg.level == QosLevel::exactlyOnceInOrder && cfg.sequenceHeader.empty())
    raise("ConfigError", "exactlyOnceInOrder requires a sequence header");
}

struct PendingMessage {
  const Message* message;
  int attempts = 0;
  bool acked = false;
};

}  // namespace

DeliveryReport deliver_with_qos(const QosConfig& cfg,
                                const std::vector<Message>& messages,
                                EndpointSimulator& endpoint,
                                ManualClock& clock) {
  validate_config(cfg);

  EndpointCounters baseline{endpoint.received(), endpoint.succeeded(),
                            endpoint.failed()};
  ConsumerState consumer(cfg);

  std::vector<PendingMessage> pending;
  pending.reserve(messages.size());
  for (const Message& m : messages) pending.push_back({&m});

  bool retries = cfg.level == QosLevel::atLeastOnce ||
                 cfg.level == QosLevel::exactlyOnce ||
                 cfg.level == QosLevel::exactlyOnceInOrder;
  bool multiDelivery = cfg.level != QosLevel::atMostOnce;
  int maxAttempts = retries ? 1 + cfg.maxRedeliveries : 1;

  bool progress = true;
  while (progress) {
    progress = false;
    for (PendingMessage& p : pending) {
      if (p.acked || p.attempts >= maxAttempts) continue;
      p.attempts++;
      progress = true;

      if (endpoint.roll_send_loss()) continue;  // never reached the endpoint

      auto inv = endpoint.invoke(*p.message);
      clock.advance(inv.latency);
      if (inv.outcome != SimOutcome::ok) continue;  // no ack either

      int deliveries = (multiDelivery && inv.duplicate) ? 2 : 1;
      for (int d = 0; d < deliveries; d++) consumer.deliver(*p.message);

      bool ackDropped = inv.dropAck || endpoint.roll_ack_loss();
      if (cfg.level == QosLevel::bestEffort)
        p.acked = true;  // fire and forget: sender never retries
      else
        p.acked = !ackDropped;
    }
    if (!retries) break;
  }

  DeliveryReport report;
  for (const auto& [id, count] : consumer.processedCount) {
    report.delivered++;
    report.duplicatesProcessed += count - 1;
  }
  report.lost = messages.size() - report.delivered;
  report.orderViolations = consumer.orderViolations;
  report.perEndpoint[endpoint.name()] =
      EndpointCounters{endpoint.received() - baseline.received,
                       endpoint.succeeded() - baseline.succeeded,
                       endpoint.failed() - baseline.failed};
  return report;
}

DeliveryReport deliver_one(const QosConfig& cfg, const Message& message,
                           EndpointSimulator& endpoint, ManualClock& clock) {
  DeliveryReport report = deliver_with_qos(cfg, {message}, endpoint, clock);
  bool retries = cfg.level == QosLevel::atLeastOnce ||
                 cfg.level == QosLevel::exactlyOnce ||
                 cfg.level == QosLevel::exactlyOnceInOrder;
  if (retries && report.delivered == 0)
    raise("DeliveryExhausted", "message '" + message.id() + "' unacknowledged after " +
                                   std::to_string(1 + cfg.maxRedeliveries) +
                                   " attempts");
  return report;
}

int timed_redeliver(const Message& msg, const std::vector<Tick>& schedule,
                    Channel& ackChannel,
                    const std::function<void(const Message&)>& send,
                    ManualClock& clock) {
  if (schedule.empty()) raise("ConfigError", "redelivery schedule is empty");

  Tick start = clock.now();
  int attempts = 0;
  auto acked = [&] {
    while (auto ack = ackChannel.receive()) {
      if (ack->header("ack-for").value_or("") == msg.id()) return true;
    }
    return false;
  };

  for (Tick offset : schedule) {
    Tick target = start + offset;
    if (target > clock.now()) clock.advance(target - clock.now());
    send(msg);
    attempts++;
    if (acked()) return attempts;
  }
  raise("RedeliveryExhausted", "no acknowledgment after " +
                                   std::to_string(attempts) + " sends");
}

SyncAsyncBridge::SyncAsyncBridge(std::shared_ptr<Channel> queue,
                                 EndpointSimulator& endpoint,
                                 ManualClock& clock, Tick timeout)
    : queue_(std::move(queue)),
      endpoint_(endpoint),
      clock_(clock),
      timeout_(timeout) {}

Message SyncAsyncBridge::accept(const Message& m) {
  queue_->send(m);
  return Message(m.id(), to_bytes("accepted"),
                 {{"accepted", "true"}, {"queued-on", queue_->name()}});
}

std::size_t SyncAsyncBridge::process_pending() {
  std::size_t processed = 0;
  while (auto m = queue_->receive()) {
    auto inv = endpoint_.invoke(*m);
    clock_.advance(std::min(inv.latency, timeout_));
    processed++;
  }
  return processed;
}

AsyncSyncBridge::AsyncSyncBridge(EndpointSimulator& endpoint,
                                 ManualClock& clock,
                                 std::string correlationHeader,
                                 Tick replyTimeout)
    : endpoint_(endpoint),
      clock_(clock),
      correlationHeader_(std::move(correlationHeader)),
      replyTimeout_(replyTimeout) {
  if (correlationHeader_.empty())
    raise("ConfigError", "asyncToSync bridge needs a correlation header");
  if (replyTimeout_ == 0)
    raise("ConfigError", "asyncToSync bridge needs a reply timeout");
}

Message AsyncSyncBridge::request(const Message& m) {
  auto correlation = m.header(correlationHeader_);
  if (!correlation)
    raise("ConfigError",
          "request carries no '" + correlationHeader_ + "' header");

  auto inv = endpoint_.invoke(m);
  if (inv.outcome != SimOutcome::ok || inv.latency > replyTimeout_) {
    clock_.advance(replyTimeout_);
    raise("CorrelationTimeout", "no reply correlated to '" + *correlation +
                                    "' within " +
                                    std::to_string(replyTimeout_) + " ticks");
  }
  clock_.advance(inv.latency);
  return inv.response.with_header(correlationHeader_, *correlation);
}

}  // namespace patternflow
