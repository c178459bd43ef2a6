#include "patternflow/simulator.hpp"

#include "patternflow/crypto.hpp"

namespace patternflow {

EndpointSimulator::EndpointSimulator(std::string name, std::uint64_t seed)
    : name_(std::move(name)), rng_(seed) {}

EndpointSimulator::Invocation EndpointSimulator::invoke(
    const Message& request) {
  BehaviorEntry entry;
  std::function<Message(const Message&)> responder;
  std::function<void(const Message&)> gate;
  {
    std::lock_guard lock(mutex_);
    received_++;
    for (const auto& e : script_)
      if (e.afterRequest == received_) entry = e;
    if (entry.outcome == SimOutcome::ok)
      succeeded_++;
    else
      failed_++;
    responder = responder_;
    gate = gate_;
  }
  if (gate) gate(request);

  Invocation inv;
  inv.outcome = entry.outcome;
  inv.latency = entry.latencyTicks;
  inv.dropAck = entry.dropAck;
  inv.duplicate = entry.duplicate;
  if (entry.outcome == SimOutcome::ok) {
    inv.response = responder
                       ? responder(request)
                       : request.with_text("ok:" + name_)
                             .with_header("endpoint", name_);
  }
  return inv;
}

bool EndpointSimulator::roll_send_loss() {
  std::lock_guard lock(mutex_);
  if (sendLossRate_ <= 0) return false;
  return rng_.next_double() < sendLossRate_;
}

bool EndpointSimulator::roll_ack_loss() {
  std::lock_guard lock(mutex_);
  if (ackLossRate_ <= 0) return false;
  return rng_.next_double() < ackLossRate_;
}

void EndpointSimulator::set_script(std::vector<BehaviorEntry> entries) {
  std::lock_guard lock(mutex_);
  script_ = std::move(entries);
}

void EndpointSimulator::set_loss_rates(double sendLossRate,
                                       double ackLossRate) {
  std::lock_guard lock(mutex_);
  sendLossRate_ = sendLossRate;
  ackLossRate_ = ackLossRate;
}

void EndpointSimulator::set_responder(
    std::function<Message(const Message&)> responder) {
  std::lock_guard lock(mutex_);
  responder_ = std::move(responder);
}

void EndpointSimulator::set_gate(std::function<void(const Message&)> gate) {
  std::lock_guard lock(mutex_);
  gate_ = std::move(gate);
}

void EndpointSimulator::reseed(std::uint64_t seed) {
  std::lock_guard lock(mutex_);
  rng_ = DeterministicRng(seed);
}

std::uint64_t EndpointSimulator::received() const {
  std::lock_guard lock(mutex_);
  return received_;
}

std::uint64_t EndpointSimulator::succeeded() const {
  std::lock_guard lock(mutex_);
  return succeeded_;
}

std::uint64_t EndpointSimulator::failed() const {
  std::lock_guard lock(mutex_);
  return failed_;
}

SimulatorRegistry::SimulatorRegistry(std::uint64_t seed) : seed_(seed) {}

namespace {

std::uint64_t derive_seed(std::uint64_t base, const std::string& name) {
  Bytes input = to_bytes(name);
  put_be64(input, base);
  Bytes digest = sha256(input);
  return get_be64(digest.data());
}

}  // namespace

std::shared_ptr<EndpointSimulator> SimulatorRegistry::get(
    const std::string& name) {
  std::lock_guard lock(mutex_);
  auto it = endpoints_.find(name);
  if (it != endpoints_.end()) return it->second;
  auto sim =
      std::make_shared<EndpointSimulator>(name, derive_seed(seed_, name));
  endpoints_[name] = sim;
  return sim;
}

bool SimulatorRegistry::exists(const std::string& name) const {
  std::lock_guard lock(mutex_);
  return endpoints_.count(name) > 0;
}

std::vector<std::string> SimulatorRegistry::names() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [name, _] : endpoints_) out.push_back(name);
  return out;
}

void SimulatorRegistry::reseed(std::uint64_t seed) {
  std::lock_guard lock(mutex_);
  seed_ = seed;
  for (auto& [name, sim] : endpoints_) sim->reseed(derive_seed(seed, name));
}

}  // namespace patternflow
