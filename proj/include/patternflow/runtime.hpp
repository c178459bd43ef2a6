#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "patternflow/breaker.hpp"
#include "patternflow/channel.hpp"
#include "patternflow/clock.hpp"
#include "patternflow/crypto.hpp"
#include "patternflow/exchange.hpp"
#include "patternflow/flow_model.hpp"
#include "patternflow/message.hpp"
#include "patternflow/monitoring.hpp"
#include "patternflow/requests.hpp"
#include "patternflow/security.hpp"
#include "patternflow/simulator.hpp"
#include "patternflow/stores.hpp"

namespace patternflow {

/// Unhandled flow failure. Carries the record of the step that raised it so
/// callers can inspect kind/raisingStep/attemptCount.
class FlowError : public PatternError {
 public:
  explicit FlowError(ExceptionRecord record)
      : PatternError("FlowError", record.kind + " in step '" +
                                      record.raisingStep + "': " +
                                      record.message),
        record_(std::move(record)) {}

  const ExceptionRecord& record() const { return record_; }

 private:
  ExceptionRecord record_;
};

struct RuntimeOptions {
  std::uint64_t seed = 1;
  std::filesystem::path dataDir;  // empty: all state memory-only
};

class Runtime;

/// Registered step implementation, referenced from flows as custom:<name>.
using Processor = std::function<void(Exchange&, Runtime&)>;

/// Read-only observer around every step execution (before and after).
using StepInterceptor =
    std::function<void(const Exchange&, const Step&, bool before)>;

/// One engine instance: owns the clock, stores, security material,
/// monitors and endpoint simulators, and executes registered flows.
class Runtime {
 public:
  explicit Runtime(RuntimeOptions options = {});

  // ---- owned infrastructure -------------------------------------------
  ManualClock& clock() { return *clock_; }
  ClockPtr clock_ptr() { return clock_; }
  StoreManager& stores() { return *stores_; }
  KeyStore& keystore() { return keystore_; }
  TrustStore& truststore() { return truststore_; }
  SecureStore& securestore() { return *securestore_; }
  TokenService& tokens() { return *tokens_; }
  AuditLog& audit() { return *audit_; }
  StatsRegistry& stats() { return *stats_; }
  IndicatorLog& indicators() { return *indicators_; }
  InactivityDetector& inactivity() { return *inactivity_; }
  MessageMonitor& monitor() { return monitor_; }
  ChannelMonitor& channel_monitor() { return channelMonitor_; }
  SanityBus& sanity() { return sanity_; }
  Scheduler& scheduler() { return *scheduler_; }
  LockManager& locks() { return *locks_; }
  SimulatorRegistry& simulators() { return simulators_; }
  PartitionSet& partitions() { return partitions_; }
  const CryptoProvider& crypto() const { return crypto_; }
  const RuntimeOptions& options() const { return options_; }

  Message create_message(Bytes body, HeaderMap headers = {});
  Message create_message(std::string_view text, HeaderMap headers = {});

  /// Deterministically provisions key material for an alias (key store +
  /// trust store) if not present. Security steps call this on first use so
  /// flow files need no out-of-band key setup.
  void provision_alias(const std::string& alias);

  // ---- channels --------------------------------------------------------
  /// Throws DuplicateChannel.
  std::shared_ptr<Channel> make_channel(const std::string& name,
                                        std::size_t capacity, ChannelMode mode,
                                        const std::string& formatTag = "");
  /// Throws UnknownChannel.
  std::shared_ptr<Channel> channel(const std::string& name) const;
  std::shared_ptr<Channel> channel_or_create(const std::string& name);

  /// Join router: every message on any input is forwarded unmodified to
  /// output. Inputs must share a format tag (FormatMismatch). Forwarding is
  /// serialized per output; per-input FIFO is preserved. Idempotent per
  /// output channel.
  void wire_join(const std::vector<std::string>& inputs,
                 const std::string& output);

  // ---- flows -----------------------------------------------------------
  /// Registers a validated flow and its inbox queue channel
  /// "flow:<name>". Throws DuplicateFlow.
  void register_flow(const FlowDefinition& flow);
  /// Registers a subprocess shared by every flow; locally defined
  /// subprocesses shadow it. Throws DuplicateSubprocess.
  void register_shared_subprocess(const std::string& name, SubprocessDef sub);
  std::optional<SubprocessDef> shared_subprocess(const std::string& name) const;
  bool has_flow(const std::string& name) const;
  /// Throws UnknownFlow.
  FlowDefinition flow(const std::string& name) const;
  std::vector<std::string> flow_names() const;

  /// Executes a registered flow now. Throws UnknownFlow, FlowStopped when
  /// the flow (or the whole runtime) is stopped, FlowError on unhandled step
  /// failure.
  Exchange run_flow(const std::string& name, const Message& input);
  /// Executes an unregistered definition inline (no admission checks).
  Exchange run_definition(const FlowDefinition& flow, const Message& input);

  /// Admission-aware entry: stopped flows reject (FlowStopped), paused
  /// flows queue the message and return nullopt, otherwise runs inline.
  std::optional<Exchange> submit(const std::string& name, const Message& input);

  /// Enqueues on the flow's inbox without processing (async delegate path).
  void enqueue(const std::string& name, const Message& input);
  /// Processes queued inbox messages (skipped while paused/stopped).
  /// Returns how many were processed.
  std::size_t drain(const std::string& name);
  std::size_t drain_all();

  /// Throws DuplicateProcessor.
  void register_processor(const std::string& name, Processor fn);
  bool has_processor(const std::string& name) const;

  // ---- control operations ----------------------------------------------
  void skip_step(const std::string& flowName, const std::string& stepName);
  void unskip_step(const std::string& flowName, const std::string& stepName);
  void stop_local(const std::string& flowName);
  void stop_all();
  void pause(const std::string& flowName);
  /// Unpauses and drains the backlog.
  std::size_t resume(const std::string& flowName);

  // ---- observation ------------------------------------------------------
  void add_step_interceptor(StepInterceptor fn);
  /// Attaches a listener to a channel; listener exceptions are swallowed
  /// and audited, never disturb traffic.
  void intercept_channel(const std::string& channelName,
                         ChannelListener listener);

  /// Per-endpoint circuit breaker (created on first use).
  std::shared_ptr<CircuitBreaker> breaker_for(const std::string& endpoint);

 private:
  friend struct FlowExecutor;

  struct FlowEntry {
    FlowDefinition def;
    std::shared_ptr<Channel> inbox;
    bool paused = false;
    bool stopped = false;
    std::set<std::string> skippedSteps;
  };

  FlowEntry snapshot_entry(const std::string& name) const;
  bool is_skipped(const std::string& flowName, const std::string& stepName) const;
  void notify_interceptors(const Exchange& ex, const Step& step, bool before);
  Exchange execute(const FlowDefinition& def, const std::string& flowName,
                   const Message& input);

  RuntimeOptions options_;
  ClockPtr clock_;
  IdGenerator ids_;
  ReferenceCryptoProvider crypto_;
  std::unique_ptr<StoreManager> stores_;
  KeyStore keystore_;
  TrustStore truststore_;
  std::shared_ptr<SecureStore> securestore_;
  std::unique_ptr<TokenService> tokens_;
  std::shared_ptr<AuditLog> audit_;
  std::unique_ptr<StatsRegistry> stats_;
  std::unique_ptr<IndicatorLog> indicators_;
  std::unique_ptr<InactivityDetector> inactivity_;
  MessageMonitor monitor_;
  ChannelMonitor channelMonitor_;
  SanityBus sanity_;
  std::unique_ptr<Scheduler> scheduler_;
  std::unique_ptr<LockManager> locks_;
  SimulatorRegistry simulators_;
  PartitionSet partitions_;

  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Channel>> channels_;
  std::map<std::string, FlowEntry> flows_;
  std::map<std::string, SubprocessDef> sharedSubprocesses_;
  std::map<std::string, Processor> processors_;
  std::vector<StepInterceptor> interceptors_;
  std::map<std::string, std::shared_ptr<CircuitBreaker>> breakers_;
  std::set<std::string> wiredJoins_;
  bool stoppedAll_ = false;
};

}  // namespace patternflow
