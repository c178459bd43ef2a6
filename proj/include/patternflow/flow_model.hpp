#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "patternflow/clock.hpp"

namespace patternflow {

struct RedeliveryPolicy {
  int maxAttempts = 1;          // total tries, including the first
  std::vector<Tick> delays;     // delay before retry i+1; last one repeats

  bool operator==(const RedeliveryPolicy&) const = default;
};

struct Step;

struct Branch {
  std::string name;
  std::vector<Step> steps;

  bool operator==(const Branch&) const = default;
};

/// One node of a flow. Scalar configuration lives in `config` (values
/// stringified); structured children in `steps` (loop bodies) and
/// `branches` (multicast).
struct Step {
  std::string type;
  std::string name;  // defaults to "<type>#<position>" when absent
  std::map<std::string, std::string> config;
  std::vector<Step> steps;
  std::vector<Branch> branches;
  std::optional<RedeliveryPolicy> redelivery;

  bool operator==(const Step&) const = default;
};

enum class HandlerMode { resume, rethrow };

struct ExceptionHandlerDef {
  std::string selector;  // exception kind, or "*" for catch-all
  HandlerMode mode = HandlerMode::resume;
  std::vector<Step> steps;

  bool operator==(const ExceptionHandlerDef&) const = default;
};

struct ParameterSpec {
  std::optional<std::string> defaultValue;

  bool operator==(const ParameterSpec&) const = default;
};

struct QosSection {
  std::string level = "bestEffort";
  int maxRedeliveries = 10;
  std::string sequenceHeader;
  std::string endpoint;

  bool operator==(const QosSection&) const = default;
};

/// Reusable scoped step group. Its handlers are consulted before the
/// parent's when a step inside it fails.
struct SubprocessDef {
  std::vector<Step> steps;
  std::vector<ExceptionHandlerDef> onException;

  bool operator==(const SubprocessDef&) const = default;
};

struct FlowDefinition {
  std::string name;
  std::map<std::string, ParameterSpec> parameters;
  std::vector<Step> steps;
  std::vector<ExceptionHandlerDef> onException;
  std::map<std::string, SubprocessDef> subprocesses;
  std::optional<QosSection> qos;

  bool operator==(const FlowDefinition&) const = default;
};

}  // namespace patternflow
