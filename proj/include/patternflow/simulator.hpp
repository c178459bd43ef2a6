#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "patternflow/clock.hpp"
#include "patternflow/message.hpp"
#include "patternflow/rng.hpp"

namespace patternflow {

enum class SimOutcome { ok, error, hang };

/// Scripted behavior override for one received request (1-based index over
/// requests that actually reach the endpoint).
struct BehaviorEntry {
  std::uint64_t afterRequest = 0;
  SimOutcome outcome = SimOutcome::ok;
  Tick latencyTicks = 1;
  bool dropAck = false;
  bool duplicate = false;
};

/// Deterministic stand-in for a remote endpoint. Requests are counted,
/// behavior comes from the script (default: ok in 1 tick), and transport
/// fault rolls (send/ack loss) are driven by a per-endpoint seeded generator
/// so whole simulations replay bit-for-bit.
class EndpointSimulator {
 public:
  explicit EndpointSimulator(std::string name, std::uint64_t seed = 1);

  struct Invocation {
    SimOutcome outcome = SimOutcome::ok;
    Tick latency = 1;
    Message response;
    bool dropAck = false;
    bool duplicate = false;
  };

  /// Counts the request, applies the script, produces the response.
  Invocation invoke(const Message& request);

  /// Transport-level fault rolls (used by the QoS delivery loop; a rolled
  /// send loss means the endpoint never sees the request).
  bool roll_send_loss();
  bool roll_ack_loss();

  void set_script(std::vector<BehaviorEntry> entries);
  void set_loss_rates(double sendLossRate, double ackLossRate);
  void set_responder(std::function<Message(const Message&)> responder);
  /// Test hook invoked while a request is in flight (e.g. to block and hold
  /// a concurrency slot).
  void set_gate(std::function<void(const Message&)> gate);
  void reseed(std::uint64_t seed);

  const std::string& name() const { return name_; }
  std::uint64_t received() const;
  std::uint64_t succeeded() const;
  std::uint64_t failed() const;

 private:
  std::string name_;
  mutable std::mutex mutex_;
  DeterministicRng rng_;
  double sendLossRate_ = 0;
  double ackLossRate_ = 0;
  std::vector<BehaviorEntry> script_;
  std::function<Message(const Message&)> responder_;
  std::function<void(const Message&)> gate_;
  std::uint64_t received_ = 0;
  std::uint64_t succeeded_ = 0;
  std::uint64_t failed_ = 0;
};

/// Named simulator registry; unknown names are created with default
/// behavior. Seeds are derived from the registry seed and the name so each
/// endpoint has an independent, reproducible stream.
class SimulatorRegistry {
 public:
  explicit SimulatorRegistry(std::uint64_t seed = 1);

  std::shared_ptr<EndpointSimulator> get(const std::string& name);
  bool exists(const std::string& name) const;
  std::vector<std::string> names() const;
  void reseed(std::uint64_t seed);

 private:
  std::uint64_t seed_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<EndpointSimulator>> endpoints_;
};

}  // namespace patternflow
