#include "patternflow/runtime.hpp"

#include <algorithm>

#include "patternflow/flowdoc.hpp"

namespace patternflow {
namespace {

/// Recursive name lookup over a flow's whole step tree.
bool tree_has_step(const std::vector<Step>& steps, const std::string& name) {
  for (const Step& s : steps) {
    if (s.name == name) return true;
    if (tree_has_step(s.steps, name)) return true;
    for (const Branch& b : s.branches)
      if (tree_has_step(b.steps, name)) return true;
  }
  return false;
}

bool flow_has_step(const FlowDefinition& def, const std::string& name) {
  if (tree_has_step(def.steps, name)) return true;
  for (const auto& h : def.onException)
    if (tree_has_step(h.steps, name)) return true;
  for (const auto& [_, sub] : def.subprocesses) {
    if (tree_has_step(sub.steps, name)) return true;
    for (const auto& h : sub.onException)
      if (tree_has_step(h.steps, name)) return true;
  }
  return false;
}

}  // namespace

Runtime::Runtime(RuntimeOptions options)
    : options_(std::move(options)),
      clock_(std::make_shared<ManualClock>()),
      ids_(options_.seed),
      simulators_(options_.seed) {
  stores_ = std::make_unique<StoreManager>(options_.dataDir, clock_);

  std::filesystem::path auditFile;
  if (!options_.dataDir.empty()) auditFile = options_.dataDir / "audit.log";
  audit_ = std::make_shared<AuditLog>(clock_, auditFile);

  keystore_.set_audit_hook(audit_->hook());
  truststore_.set_audit_hook(audit_->hook());

  Bytes masterKey = keypair_from_seed("runtime-master").privateKey;
  auto secretsInner = std::make_shared<EncryptingStore>(
      stores_->open("secrets"), masterKey, crypto_, /*encrypt=*/true);
  securestore_ = std::make_shared<SecureStore>(secretsInner, clock_);
  securestore_->set_audit_hook(audit_->hook());
  tokens_ = std::make_unique<TokenService>(securestore_, clock_, audit_.get());

  stats_ = std::make_unique<StatsRegistry>(stores_->open("stats"));
  indicators_ = std::make_unique<IndicatorLog>(stores_->open("indicators"), clock_);
  inactivity_ = std::make_unique<InactivityDetector>(clock_, *indicators_);
  scheduler_ = std::make_unique<Scheduler>(stores_->open("scheduler"), clock_);
  locks_ = std::make_unique<LockManager>(stores_->open("locks"), clock_);
}

Message Runtime::create_message(Bytes body, HeaderMap headers) {
  return Message(ids_.next(), std::move(body), std::move(headers));
}

Message Runtime::create_message(std::string_view text, HeaderMap headers) {
  return create_message(to_bytes(text), std::move(headers));
}

void Runtime::provision_alias(const std::string& alias) {
  if (keystore_.has(alias)) return;
  KeyPair pair = keypair_from_seed(alias);
  keystore_.add(alias, pair);
  truststore_.add(alias, pair.certificate);
}

std::shared_ptr<Channel> Runtime::make_channel(const std::string& name,
                                               std::size_t capacity,
                                               ChannelMode mode,
                                               const std::string& formatTag) {
  std::lock_guard lock(mutex_);
  if (channels_.count(name))
    raise("DuplicateChannel", "channel '" + name + "' already exists");
  auto ch = std::make_shared<Channel>(name, capacity, mode, formatTag);
  channels_[name] = ch;
  return ch;
}

std::shared_ptr<Channel> Runtime::channel(const std::string& name) const {
  std::lock_guard lock(mutex_);
  auto it = channels_.find(name);
  if (it == channels_.end())
    raise("UnknownChannel", "no channel '" + name + "'");
  return it->second;
}

std::shared_ptr<Channel> Runtime::channel_or_create(const std::string& name) {
  std::lock_guard lock(mutex_);
  auto it = channels_.find(name);
  if (it != channels_.end()) return it->second;
  auto ch = std::make_shared<Channel>(name, 1024, ChannelMode::queue, "");
  channels_[name] = ch;
  return ch;
}

void Runtime::wire_join(const std::vector<std::string>& inputs,
                        const std::string& output) {
  if (inputs.size() < 2)
    raise("ConfigError", "join needs at least 2 input channels");
  {
    std::lock_guard lock(mutex_);
    if (wiredJoins_.count(output)) return;
    wiredJoins_.insert(output);
  }
  std::vector<std::shared_ptr<Channel>> ins;
  for (const auto& name : inputs) ins.push_back(channel_or_create(name));
  auto out = channel_or_create(output);

  for (std::size_t i = 1; i < ins.size(); ++i)
    if (ins[i]->format_tag() != ins[0]->format_tag())
      raise("FormatMismatch", "join inputs '" + ins[0]->name() + "' (" +
                                  ins[0]->format_tag() + ") and '" +
                                  ins[i]->name() + "' (" +
                                  ins[i]->format_tag() + ") disagree");

  auto pumpMutex = std::make_shared<std::mutex>();
  for (auto& in : ins) {
    if (in->mode() == ChannelMode::direct) {
      in->set_consumer([out, pumpMutex](const Message& m) {
        std::lock_guard g(*pumpMutex);
        out->send(m);
      });
    } else {
      std::weak_ptr<Channel> weakIn = in;
      in->add_enqueue_hook([weakIn, out, pumpMutex] {
        auto ch = weakIn.lock();
        if (!ch) return;
        std::lock_guard g(*pumpMutex);
        while (auto m = ch->receive()) out->send(*m);
      });
    }
  }
}

void Runtime::register_flow(const FlowDefinition& flow) {
  std::set<std::string> shared;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [name, sub] : sharedSubprocesses_) {
      (void)sub;
      shared.insert(name);
    }
  }
  validate_flow(flow, shared);
  std::lock_guard lock(mutex_);
  if (flows_.count(flow.name))
    raise("DuplicateFlow", "flow '" + flow.name + "' already registered");
  FlowEntry entry;
  entry.def = flow;
  std::string inboxName = "flow:" + flow.name;
  auto it = channels_.find(inboxName);
  if (it != channels_.end()) {
    entry.inbox = it->second;
  } else {
    entry.inbox = std::make_shared<Channel>(inboxName, 1024, ChannelMode::queue, "");
    channels_[inboxName] = entry.inbox;
  }
  flows_[flow.name] = std::move(entry);
}

void Runtime::register_shared_subprocess(const std::string& name,
                                         SubprocessDef sub) {
  std::lock_guard lock(mutex_);
  if (sharedSubprocesses_.count(name))
    raise("DuplicateSubprocess", "shared subprocess '" + name + "' already registered");
  sharedSubprocesses_[name] = std::move(sub);
}

std::optional<SubprocessDef> Runtime::shared_subprocess(
    const std::string& name) const {
  std::lock_guard lock(mutex_);
  auto it = sharedSubprocesses_.find(name);
  if (it == sharedSubprocesses_.end()) return std::nullopt;
  return it->second;
}

bool Runtime::has_flow(const std::string& name) const {
  std::lock_guard lock(mutex_);
  return flows_.count(name) != 0;
}

FlowDefinition Runtime::flow(const std::string& name) const {
  std::lock_guard lock(mutex_);
  auto it = flows_.find(name);
  if (it == flows_.end()) raise("UnknownFlow", "no flow '" + name + "'");
  return it->second.def;
}

std::vector<std::string> Runtime::flow_names() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> names;
  for (const auto& [name, _] : flows_) names.push_back(name);
  return names;
}

Runtime::FlowEntry Runtime::snapshot_entry(const std::string& name) const {
  std::lock_guard lock(mutex_);
  auto it = flows_.find(name);
  if (it == flows_.end()) raise("UnknownFlow", "no flow '" + name + "'");
  FlowEntry copy = it->second;
  if (stoppedAll_) copy.stopped = true;
  return copy;
}

Exchange Runtime::run_flow(const std::string& name, const Message& input) {
  FlowEntry entry = snapshot_entry(name);
  if (entry.stopped)
    raise("FlowStopped", "flow '" + name + "' is not accepting messages");
  return execute(entry.def, name, input);
}

Exchange Runtime::run_definition(const FlowDefinition& flow,
                                 const Message& input) {
  return execute(flow, flow.name, input);
}

std::optional<Exchange> Runtime::submit(const std::string& name,
                                        const Message& input) {
  std::shared_ptr<Channel> inbox;
  {
    std::lock_guard lock(mutex_);
    auto it = flows_.find(name);
    if (it == flows_.end()) raise("UnknownFlow", "no flow '" + name + "'");
    if (it->second.stopped || stoppedAll_)
      raise("FlowStopped", "flow '" + name + "' is not accepting messages");
    if (it->second.paused) inbox = it->second.inbox;
  }
  if (inbox) {
    inbox->send(input);
    return std::nullopt;
  }
  return run_flow(name, input);
}

void Runtime::enqueue(const std::string& name, const Message& input) {
  std::shared_ptr<Channel> inbox;
  {
    std::lock_guard lock(mutex_);
    auto it = flows_.find(name);
    if (it == flows_.end()) raise("UnknownFlow", "no flow '" + name + "'");
    if (it->second.stopped || stoppedAll_)
      raise("FlowStopped", "flow '" + name + "' is not accepting messages");
    inbox = it->second.inbox;
  }
  inbox->send(input);
}

std::size_t Runtime::drain(const std::string& name) {
  std::size_t processed = 0;
  while (true) {
    std::shared_ptr<Channel> inbox;
    FlowDefinition def;
    {
      std::lock_guard lock(mutex_);
      auto it = flows_.find(name);
      if (it == flows_.end()) raise("UnknownFlow", "no flow '" + name + "'");
      if (it->second.paused || it->second.stopped || stoppedAll_) break;
      inbox = it->second.inbox;
      def = it->second.def;
    }
    auto msg = inbox->receive();
    if (!msg) break;
    try {
      execute(def, name, *msg);
    } catch (const FlowError&) {
      // failure is recorded in stats and the monitor; draining continues
    }
    ++processed;
  }
  return processed;
}

std::size_t Runtime::drain_all() {
  std::size_t total = 0;
  // Draining one flow can enqueue onto another (async delegate); loop until
  // a full pass moves nothing.
  while (true) {
    std::size_t pass = 0;
    for (const auto& name : flow_names()) pass += drain(name);
    total += pass;
    if (pass == 0) break;
  }
  return total;
}

void Runtime::register_processor(const std::string& name, Processor fn) {
  std::lock_guard lock(mutex_);
  if (processors_.count(name))
    raise("DuplicateProcessor", "processor '" + name + "' already registered");
  processors_[name] = std::move(fn);
}

bool Runtime::has_processor(const std::string& name) const {
  std::lock_guard lock(mutex_);
  return processors_.count(name) != 0;
}

void Runtime::skip_step(const std::string& flowName,
                        const std::string& stepName) {
  std::lock_guard lock(mutex_);
  auto it = flows_.find(flowName);
  if (it == flows_.end()) raise("UnknownFlow", "no flow '" + flowName + "'");
  if (!flow_has_step(it->second.def, stepName))
    raise("UnknownStep",
          "flow '" + flowName + "' has no step '" + stepName + "'");
  it->second.skippedSteps.insert(stepName);
}

void Runtime::unskip_step(const std::string& flowName,
                          const std::string& stepName) {
  std::lock_guard lock(mutex_);
  auto it = flows_.find(flowName);
  if (it == flows_.end()) raise("UnknownFlow", "no flow '" + flowName + "'");
  it->second.skippedSteps.erase(stepName);
}

void Runtime::stop_local(const std::string& flowName) {
  std::lock_guard lock(mutex_);
  auto it = flows_.find(flowName);
  if (it == flows_.end()) raise("UnknownFlow", "no flow '" + flowName + "'");
  it->second.stopped = true;
}

void Runtime::stop_all() {
  std::lock_guard lock(mutex_);
  stoppedAll_ = true;
}

void Runtime::pause(const std::string& flowName) {
  std::lock_guard lock(mutex_);
  auto it = flows_.find(flowName);
  if (it == flows_.end()) raise("UnknownFlow", "no flow '" + flowName + "'");
  it->second.paused = true;
}

std::size_t Runtime::resume(const std::string& flowName) {
  {
    std::lock_guard lock(mutex_);
    auto it = flows_.find(flowName);
    if (it == flows_.end()) raise("UnknownFlow", "no flow '" + flowName + "'");
    it->second.paused = false;
  }
  return drain(flowName);
}

void Runtime::add_step_interceptor(StepInterceptor fn) {
  std::lock_guard lock(mutex_);
  interceptors_.push_back(std::move(fn));
}

void Runtime::intercept_channel(const std::string& channelName,
                                ChannelListener listener) {
  auto ch = channel(channelName);
  auto auditLog = audit_;
  auto wrapped = [listener = std::move(listener), auditLog,
                  channelName](const Message& m) {
    try {
      listener(m);
    } catch (const std::exception& e) {
      auditLog->append("listener-error", "channel:" + channelName, e.what());
    } catch (...) {
      auditLog->append("listener-error", "channel:" + channelName,
                       "unknown exception");
    }
  };
  ch->add_listener(std::move(wrapped));
}

std::shared_ptr<CircuitBreaker> Runtime::breaker_for(
    const std::string& endpoint) {
  std::lock_guard lock(mutex_);
  auto it = breakers_.find(endpoint);
  if (it != breakers_.end()) return it->second;
  auto breaker = std::make_shared<CircuitBreaker>(BreakerConfig{}, clock_);
  breakers_[endpoint] = breaker;
  return breaker;
}

bool Runtime::is_skipped(const std::string& flowName,
                         const std::string& stepName) const {
  std::lock_guard lock(mutex_);
  auto it = flows_.find(flowName);
  if (it == flows_.end()) return false;
  return it->second.skippedSteps.count(stepName) != 0;
}

void Runtime::notify_interceptors(const Exchange& ex, const Step& step,
                                  bool before) {
  std::vector<StepInterceptor> observers;
  {
    std::lock_guard lock(mutex_);
    observers = interceptors_;
  }
  for (auto& fn : observers) {
    try {
      fn(ex, step, before);
    } catch (const std::exception& e) {
      audit_->append("interceptor-error", "step:" + step.name, e.what());
    } catch (...) {
      audit_->append("interceptor-error", "step:" + step.name,
                     "unknown exception");
    }
  }
}

}  // namespace patternflow
