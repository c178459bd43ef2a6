#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "patternflow/channel.hpp"
#include "patternflow/clock.hpp"
#include "patternflow/document.hpp"
#include "patternflow/simulator.hpp"
#include "patternflow/stores.hpp"

namespace patternflow {

enum class QosLevel {
  bestEffort,
  atLeastOnce,
  atMostOnce,
  exactlyOnce,
  exactlyOnceInOrder
};

QosLevel qos_level_from(const std::string& name);
const char* qos_level_name(QosLevel level);

struct QosConfig {
  QosLevel level = QosLevel::bestEffort;
  int maxRedeliveries = 10;
  std::shared_ptr<KeyValueStore> dedupStore;  // exactlyOnce family
  std::string sequenceHeader;                 // exactlyOnceInOrder
  std::uint32_t dedupTtl = 10000;             // ticks
  std::size_t gapCapacity = 64;               // reorder buffer bound
};

struct EndpointCounters {
  std::uint64_t received = 0;
  std::uint64_t succeeded = 0;
  std::uint64_t failed = 0;
};

struct DeliveryReport {
  std::uint64_t delivered = 0;
  std::uint64_t duplicatesProcessed = 0;
  std::uint64_t lost = 0;
  std::uint64_t orderViolations = 0;
  std::map<std::string, EndpointCounters> perEndpoint;

  Json to_json() const;
};

/// Reorder buffer: sequence numbers start at 1 and are contiguous. A message
/// is released only when all predecessors have been released; releases are
/// maximal contiguous runs. Messages more than gapCapacity ahead of the next
/// expected sequence raise BufferOverflow.
class CommutativeReceiver {
 public:
  explicit CommutativeReceiver(std::size_t gapCapacity,
                               std::uint64_t start = 1);

  std::vector<Message> push(std::uint64_t seq, Message m);

  std::uint64_t next_expected() const { return nextExpected_; }
  std::size_t pending() const { return pending_.size(); }

 private:
  std::size_t gapCapacity_;
  std::uint64_t nextExpected_;
  std::map<std::uint64_t, Message> pending_;
};

/// Drives a batch of messages through a faulty endpoint under the requested
/// delivery level. Retransmission runs in rounds: every not-yet-acknowledged
/// message is retried once per round, in original submission order, so late
/// redeliveries naturally arrive after later messages. Counters are consumer
/// side: delivered = distinct ids processed, duplicates = extra processings,
/// order violations = processings of a sequence lower than one already seen.
DeliveryReport deliver_with_qos(const QosConfig& cfg,
                                const std::vector<Message>& messages,
                                EndpointSimulator& endpoint,
                                ManualClock& clock);

/// Single-message variant that throws DeliveryExhausted when an
/// atLeastOnce-family message runs out of redeliveries without an ack.
DeliveryReport deliver_one(const QosConfig& cfg, const Message& message,
                           EndpointSimulator& endpoint, ManualClock& clock);

/// Sends identical copies at the scheduled tick offsets until an ack message
/// (header "ack-for" = message id) shows up on ackChannel. Returns attempts
/// made; throws RedeliveryExhausted when the schedule runs out unacked.
int timed_redeliver(const Message& msg, const std::vector<Tick>& schedule,
                    Channel& ackChannel,
                    const std::function<void(const Message&)>& send,
                    ManualClock& clock);

/// Synchronous caller, asynchronous processing: accept() returns an
/// immediate receipt and queues the message; process_pending() later drives
/// the queued messages through the endpoint.
class SyncAsyncBridge {
 public:
  SyncAsyncBridge(std::shared_ptr<Channel> queue, EndpointSimulator& endpoint,
                  ManualClock& clock, Tick timeout = 100);

  Message accept(const Message& m);
  std::size_t process_pending();

 private:
  std::shared_ptr<Channel> queue_;
  EndpointSimulator& endpoint_;
  ManualClock& clock_;
  Tick timeout_;
};

/// Asynchronous caller, synchronous endpoint: a queued request triggers one
/// synchronous call and the reply is correlated back by the configured
/// header. Throws CorrelationTimeout when no reply arrives in time.
class AsyncSyncBridge {
 public:
  AsyncSyncBridge(EndpointSimulator& endpoint, ManualClock& clock,
                  std::string correlationHeader, Tick replyTimeout);

  Message request(const Message& m);

 private:
  EndpointSimulator& endpoint_;
  ManualClock& clock_;
  std::string correlationHeader_;
  Tick replyTimeout_;
};

}  // namespace patternflow
