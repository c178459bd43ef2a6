#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "patternflow/clock.hpp"
#include "patternflow/message.hpp"

namespace patternflow {

struct ExceptionRecord {
  std::string kind;
  std::string message;
  std::string raisingStep;
  std::uint32_t attemptCount = 1;

  bool operator==(const ExceptionRecord&) const = default;
};

struct HistoryEntry {
  std::string step;
  Tick timestamp = 0;
  std::string outcome;  // ok | failed | skipped | cancelled

  bool operator==(const HistoryEntry&) const = default;
};

/// Mutable envelope a flow instance works on: the current message, instance
/// scoped properties, the pending exception (if any) and the step history.
class Exchange {
 public:
  Exchange() = default;
  explicit Exchange(Message message, std::string instanceId = "")
      : message_(std::move(message)), instanceId_(std::move(instanceId)) {}

  const Message& message() const { return message_; }
  void set_message(Message m) { message_ = std::move(m); }

  const std::string& instance_id() const { return instanceId_; }
  void set_instance_id(std::string id) { instanceId_ = std::move(id); }

  const std::map<std::string, std::string>& properties() const {
    return properties_;
  }
  std::optional<std::string> property(const std::string& name) const {
    auto it = properties_.find(name);
    if (it == properties_.end()) return std::nullopt;
    return it->second;
  }
  void set_property(const std::string& name, std::string value) {
    properties_[name] = std::move(value);
  }

  const std::optional<ExceptionRecord>& exception() const { return exception_; }
  void set_exception(ExceptionRecord rec) { exception_ = std::move(rec); }
  void clear_exception() { exception_.reset(); }

  const std::vector<HistoryEntry>& history() const { return history_; }
  void record(std::string step, Tick timestamp, std::string outcome) {
    history_.push_back({std::move(step), timestamp, std::move(outcome)});
  }

 private:
  Message message_;
  std::string instanceId_;
  std::map<std::string, std::string> properties_;
  std::optional<ExceptionRecord> exception_;
  std::vector<HistoryEntry> history_;
};

}  // namespace patternflow
