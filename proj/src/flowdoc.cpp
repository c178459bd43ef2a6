#include "patternflow/flowdoc.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <set>
#include <vector>

#include "patternflow/errors.hpp"
#include "patternflow/qos.hpp"

namespace patternflow {
namespace {

[[noreturn]] void vfail(const std::string& rule, const std::string& where,
                        const std::string& detail = "") {
  std::string msg = rule + " at " + where;
  if (!detail.empty()) msg += ": " + detail;
  throw PatternError("ValidationError", msg);
}

const std::set<std::string>& builtin_step_types() {
  static const std::set<std::string> kTypes = {
      // transforms
      "map", "encode", "decode", "marshal", "unmarshal", "compress",
      "decompress", "convert", "sort", "replace", "metadata",
      // structure
      "multicast", "join", "delegate", "loop", "subprocess",
      // security
      "encrypt", "decrypt", "sign", "verify", "authorize",
      // exceptions
      "validate", "throw", "cancel",
      // endpoints and operations
      "request", "indicator",
      // stores
      "store-put", "store-get", "store-remove"};
  return kTypes;
}

const std::map<std::string, std::vector<std::string>>& required_config() {
  static const std::map<std::string, std::vector<std::string>> kRequired = {
      {"map", {"rules"}},
      {"replace", {"rules"}},
      {"convert", {"to"}},
      {"marshal", {"from", "to"}},
      {"unmarshal", {"from"}},
      {"delegate", {"target"}},
      {"loop", {"condition", "maxIterations"}},
      {"subprocess", {"name"}},
      {"request", {"endpoint"}},
      {"encrypt", {"keyAlias"}},
      {"decrypt", {"keyAlias"}},
      {"sign", {"keyAlias"}},
      {"verify", {"trustAlias"}},
      {"throw", {"kind"}},
      {"join", {"inputs", "output"}},
      {"store-put", {"store", "key"}},
      {"store-get", {"store", "key"}},
      {"store-remove", {"store", "key"}},
  };
  return kRequired;
}

bool has_placeholder(const std::string& value) {
  return value.find("${") != std::string::npos;
}

/// Collect ${name} placeholder names; malformed syntax raises immediately.
void collect_placeholders(const std::string& value, const std::string& where,
                          std::vector<std::string>& out) {
  std::size_t pos = 0;
  while ((pos = value.find("${", pos)) != std::string::npos) {
    auto close = value.find('}', pos + 2);
    if (close == std::string::npos) vfail("bad-placeholder", where, value);
    std::string name = value.substr(pos + 2, close - pos - 2);
    if (name.empty()) vfail("bad-placeholder", where, value);
    out.push_back(name);
    pos = close + 1;
  }
}

void expect_keys(const Doc& obj, std::initializer_list<const char*> allowed,
                 const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = std::any_of(allowed.begin(), allowed.end(),
                             [&](const char* k) { return it.key() == k; });
    if (!known) vfail("unknown-field", where, it.key());
  }
}

std::string require_string(const Doc& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) vfail("missing-field", where, key);
  if (!it->is_string()) vfail("bad-type", where + "." + key, "expected string");
  return it->get<std::string>();
}

std::string stringify_config_value(const Doc& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) vfail("bad-type", where, "config value may not be null");
  // numbers, booleans, arrays, objects are carried as their JSON text
  return v.dump();
}

std::vector<Step> parse_steps(const Doc& arr, const std::string& where);

Step parse_step(const Doc& node, const std::string& where, std::size_t position) {
  if (!node.is_object()) vfail("bad-type", where, "step must be an object");
  expect_keys(node, {"type", "name", "config", "steps", "branches", "redelivery"}, where);

  Step step;
  step.type = require_string(node, "type", where);
  if (auto it = node.find("name"); it != node.end()) {
    if (!it->is_string()) vfail("bad-type", where + ".name", "expected string");
    step.name = it->get<std::string>();
  }
  if (step.name.empty()) step.name = step.type + "#" + std::to_string(position + 1);

  if (auto it = node.find("config"); it != node.end()) {
    if (!it->is_object()) vfail("bad-type", where + ".config", "expected object");
    for (auto c = it->begin(); c != it->end(); ++c)
      step.config[c.key()] = stringify_config_value(c.value(), where + ".config." + c.key());
  }

  if (auto it = node.find("steps"); it != node.end())
    step.steps = parse_steps(*it, where + ".steps");

  if (auto it = node.find("branches"); it != node.end()) {
    if (!it->is_array()) vfail("bad-type", where + ".branches", "expected array");
    std::size_t bi = 0;
    for (const auto& bnode : *it) {
      std::string bwhere = where + ".branches[" + std::to_string(bi) + "]";
      if (!bnode.is_object()) vfail("bad-type", bwhere, "branch must be an object");
      expect_keys(bnode, {"name", "steps"}, bwhere);
      Branch branch;
      branch.name = require_string(bnode, "name", bwhere);
      if (auto s = bnode.find("steps"); s != bnode.end())
        branch.steps = parse_steps(*s, bwhere + ".steps");
      step.branches.push_back(std::move(branch));
      ++bi;
    }
  }

  if (auto it = node.find("redelivery"); it != node.end()) {
    std::string rwhere = where + ".redelivery";
    if (!it->is_object()) vfail("bad-type", rwhere, "expected object");
    expect_keys(*it, {"maxAttempts", "delays"}, rwhere);
    RedeliveryPolicy policy;
    if (auto m = it->find("maxAttempts"); m != it->end()) {
      if (!m->is_number_integer() || m->get<std::int64_t>() < 1)
        vfail("bad-redelivery", rwhere, "maxAttempts must be a positive integer");
      policy.maxAttempts = static_cast<int>(m->get<std::int64_t>());
    }
    if (auto d = it->find("delays"); d != it->end()) {
      if (!d->is_array()) vfail("bad-type", rwhere + ".delays", "expected array");
      for (const auto& tick : *d) {
        if (!tick.is_number_integer() || tick.get<std::int64_t>() < 0)
          vfail("bad-redelivery", rwhere, "delays must be non-negative integers");
        policy.delays.push_back(static_cast<Tick>(tick.get<std::int64_t>()));
      }
    }
    step.redelivery = std::move(policy);
  }
  return step;
}

std::vector<Step> parse_steps(const Doc& arr, const std::string& where) {
  if (!arr.is_array()) vfail("bad-type", where, "expected array");
  std::vector<Step> steps;
  std::size_t i = 0;
  for (const auto& node : arr) {
    steps.push_back(parse_step(node, where + "[" + std::to_string(i) + "]", i));
    ++i;
  }
  return steps;
}

std::vector<ExceptionHandlerDef> parse_handlers(const Doc& arr, const std::string& where) {
  if (!arr.is_array()) vfail("bad-type", where, "expected array");
  std::vector<ExceptionHandlerDef> handlers;
  std::size_t hi = 0;
  for (const auto& node : arr) {
    std::string hwhere = where + "[" + std::to_string(hi) + "]";
    if (!node.is_object()) vfail("bad-type", hwhere, "handler must be an object");
    expect_keys(node, {"selector", "mode", "steps"}, hwhere);
    ExceptionHandlerDef handler;
    handler.selector = require_string(node, "selector", hwhere);
    if (auto m = node.find("mode"); m != node.end()) {
      std::string mode = m->is_string() ? m->get<std::string>() : std::string();
      if (mode == "resume")
        handler.mode = HandlerMode::resume;
      else if (mode == "rethrow")
        handler.mode = HandlerMode::rethrow;
      else
        vfail("bad-config", hwhere + ".mode", "expected resume|rethrow");
    }
    if (auto s = node.find("steps"); s != node.end())
      handler.steps = parse_steps(*s, hwhere + ".steps");
    handlers.push_back(std::move(handler));
    ++hi;
  }
  return handlers;
}

// ---------------------------------------------------------------------------
// validation

struct ValidationContext {
  std::set<std::string> parameters;
  std::set<std::string> subprocessNames;
  // subprocess references discovered while walking: (caller scope, callee)
  std::vector<std::pair<std::string, std::string>> references;
  std::string scope;  // "" = flow body, else subprocess name
};

void check_enum(const Step& step, const std::string& key,
                std::initializer_list<const char*> allowed, const std::string& where) {
  auto it = step.config.find(key);
  if (it == step.config.end() || has_placeholder(it->second)) return;
  bool ok = std::any_of(allowed.begin(), allowed.end(),
                        [&](const char* v) { return it->second == v; });
  if (!ok) vfail("bad-config", where + ".config." + key, it->second);
}

void check_positive_int(const Step& step, const std::string& key, const std::string& where) {
  auto it = step.config.find(key);
  if (it == step.config.end() || has_placeholder(it->second)) return;
  long long value = 0;
  const char* first = it->second.data();
  const char* last = first + it->second.size();
  auto [p, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || p != last || value < 1)
    vfail("bad-config", where + ".config." + key, "expected positive integer");
}

void check_steps(const std::vector<Step>& steps, const std::string& where,
                 ValidationContext& ctx);

void check_step(const Step& step, const std::string& where, ValidationContext& ctx) {
  bool custom = step.type.rfind("custom:", 0) == 0 && step.type.size() > 7;
  if (!custom && builtin_step_types().count(step.type) == 0)
    vfail("unknown-step-type", where, step.type);

  if (auto req = required_config().find(step.type); req != required_config().end())
    for (const auto& key : req->second)
      if (step.config.find(key) == step.config.end())
        vfail("missing-config", where, step.type + " requires '" + key + "'");

  std::vector<std::string> placeholders;
  for (const auto& [key, value] : step.config)
    collect_placeholders(value, where + ".config." + key, placeholders);
  for (const auto& name : placeholders)
    if (ctx.parameters.count(name) == 0)
      vfail("undeclared-parameter", where, name);

  check_enum(step, "scheme", {"base64", "base16"}, where);
  if (step.type == "marshal" || step.type == "unmarshal") {
    check_enum(step, "from", {"json", "xml"}, where);
    check_enum(step, "to", {"json", "xml"}, where);
  }
  if (step.type == "convert") check_enum(step, "to", {"text", "bytes"}, where);
  if (step.type == "delegate") check_enum(step, "mode", {"sync", "async"}, where);
  if (step.type == "loop") {
    check_enum(step, "failMode", {"fail", "warn"}, where);
    check_positive_int(step, "maxIterations", where);
  }
  if (step.type == "request") check_positive_int(step, "timeout", where);

  if (step.type == "multicast") {
    if (step.branches.empty()) vfail("missing-branches", where, "multicast needs >=1 branch");
    check_enum(step, "mode", {"sequential", "parallel"}, where);
    std::set<std::string> names;
    for (const auto& branch : step.branches)
      if (!names.insert(branch.name).second) vfail("duplicate-branch", where, branch.name);
    if (auto it = step.config.find("adopt");
        it != step.config.end() && !has_placeholder(it->second) && names.count(it->second) == 0)
      vfail("unknown-branch", where, it->second);
    std::size_t bi = 0;
    for (const auto& branch : step.branches) {
      check_steps(branch.steps, where + ".branches[" + std::to_string(bi) + "].steps", ctx);
      ++bi;
    }
  } else if (!step.branches.empty()) {
    vfail("unexpected-branches", where, step.type);
  }

  if (step.type == "loop") {
    check_steps(step.steps, where + ".steps", ctx);
  } else if (!step.steps.empty()) {
    vfail("unexpected-steps", where, step.type);
  }

  if (step.type == "subprocess") {
    const std::string& target = step.config.at("name");
    if (!has_placeholder(target)) {
      if (ctx.subprocessNames.count(target) == 0) vfail("unknown-subprocess", where, target);
      ctx.references.emplace_back(ctx.scope, target);
    }
  }
}

void check_steps(const std::vector<Step>& steps, const std::string& where,
                 ValidationContext& ctx) {
  std::size_t i = 0;
  for (const auto& step : steps) {
    check_step(step, where + "[" + std::to_string(i) + "]", ctx);
    ++i;
  }
}

void check_subprocess_cycles(const FlowDefinition& flow, const ValidationContext& ctx) {
  std::map<std::string, std::vector<std::string>> edges;
  for (const auto& [caller, callee] : ctx.references)
    if (!caller.empty()) edges[caller].push_back(callee);

  enum class Mark { none, visiting, done };
  std::map<std::string, Mark> marks;
  for (const auto& [name, body] : flow.subprocesses) {
    (void)body;
    marks[name] = Mark::none;
  }

  std::function<void(const std::string&)> visit = [&](const std::string& node) {
    marks[node] = Mark::visiting;
    for (const auto& next : edges[node]) {
      if (marks[next] == Mark::visiting)
        vfail("cycle", "subprocesses." + node, "references " + next);
      if (marks[next] == Mark::none) visit(next);
    }
    marks[node] = Mark::done;
  };
  for (const auto& [name, mark] : marks)
    if (mark == Mark::none) visit(name);
}

}  // namespace

bool is_known_step_type(const std::string& type) {
  if (type.rfind("custom:", 0) == 0) return type.size() > 7;
  return builtin_step_types().count(type) != 0;
}

void validate_flow(const FlowDefinition& flow) { validate_flow(flow, {}); }

void validate_flow(const FlowDefinition& flow,
                   const std::set<std::string>& sharedSubprocesses) {
  if (flow.name.empty()) vfail("missing-name", "flow");

  ValidationContext ctx;
  for (const auto& [name, spec] : flow.parameters) {
    (void)spec;
    if (name.empty()) vfail("bad-parameter", "parameters", "empty name");
    ctx.parameters.insert(name);
  }
  ctx.subprocessNames = sharedSubprocesses;
  for (const auto& [name, body] : flow.subprocesses) {
    (void)body;
    if (name.empty()) vfail("bad-subprocess", "subprocesses", "empty name");
    ctx.subprocessNames.insert(name);
  }

  ctx.scope.clear();
  check_steps(flow.steps, "steps", ctx);

  std::size_t hi = 0;
  for (const auto& handler : flow.onException) {
    std::string where = "onException[" + std::to_string(hi) + "]";
    if (handler.selector.empty()) vfail("missing-selector", where);
    ctx.scope.clear();
    check_steps(handler.steps, where + ".steps", ctx);
    ++hi;
  }

  for (const auto& [name, sub] : flow.subprocesses) {
    ctx.scope = name;
    check_steps(sub.steps, "subprocesses." + name, ctx);
    std::size_t shi = 0;
    for (const auto& handler : sub.onException) {
      std::string where = "subprocesses." + name + ".onException[" + std::to_string(shi) + "]";
      if (handler.selector.empty()) vfail("missing-selector", where);
      check_steps(handler.steps, where + ".steps", ctx);
      ++shi;
    }
  }

  check_subprocess_cycles(flow, ctx);

  if (flow.qos) {
    const QosSection& qos = *flow.qos;
    try {
      (void)qos_level_from(qos.level);
    } catch (const PatternError&) {
      vfail("bad-qos-level", "qos", qos.level);
    }
    if (qos.maxRedeliveries < 0) vfail("bad-config", "qos.maxRedeliveries", "negative");
    if (qos.level == "exactlyOnceInOrder" && qos.sequenceHeader.empty())
      vfail("missing-config", "qos", "exactlyOnceInOrder requires 'sequenceHeader'");
    if (qos.endpoint.empty()) vfail("missing-config", "qos", "'endpoint' required");
    std::vector<std::string> placeholders;
    collect_placeholders(qos.sequenceHeader, "qos.sequenceHeader", placeholders);
    collect_placeholders(qos.endpoint, "qos.endpoint", placeholders);
    for (const auto& name : placeholders)
      if (ctx.parameters.count(name) == 0) vfail("undeclared-parameter", "qos", name);
  }
}

FlowDefinition flow_from_doc(const Doc& root) {
  if (!root.is_object()) vfail("not-an-object", "document");
  expect_keys(root, {"name", "parameters", "steps", "onException", "subprocesses", "qos"},
              "flow");

  FlowDefinition flow;
  flow.name = require_string(root, "name", "flow");

  if (auto it = root.find("parameters"); it != root.end()) {
    if (!it->is_object()) vfail("bad-type", "parameters", "expected object");
    for (auto p = it->begin(); p != it->end(); ++p) {
      ParameterSpec spec;
      if (p.value().is_string())
        spec.defaultValue = p.value().get<std::string>();
      else if (!p.value().is_null())
        vfail("bad-type", "parameters." + p.key(), "expected string or null");
      flow.parameters[p.key()] = std::move(spec);
    }
  }

  auto stepsIt = root.find("steps");
  if (stepsIt == root.end()) vfail("missing-field", "flow", "steps");
  flow.steps = parse_steps(*stepsIt, "steps");

  if (auto it = root.find("onException"); it != root.end())
    flow.onException = parse_handlers(*it, "onException");

  if (auto it = root.find("subprocesses"); it != root.end()) {
    if (!it->is_object()) vfail("bad-type", "subprocesses", "expected object");
    for (auto sp = it->begin(); sp != it->end(); ++sp) {
      std::string where = "subprocesses." + sp.key();
      SubprocessDef sub;
      if (sp.value().is_array()) {
        sub.steps = parse_steps(sp.value(), where);
      } else if (sp.value().is_object()) {
        expect_keys(sp.value(), {"steps", "onException"}, where);
        if (auto s = sp.value().find("steps"); s != sp.value().end())
          sub.steps = parse_steps(*s, where + ".steps");
        if (auto h = sp.value().find("onException"); h != sp.value().end())
          sub.onException = parse_handlers(*h, where + ".onException");
      } else {
        vfail("bad-type", where, "expected array or object");
      }
      flow.subprocesses[sp.key()] = std::move(sub);
    }
  }

  if (auto it = root.find("qos"); it != root.end()) {
    if (!it->is_object()) vfail("bad-type", "qos", "expected object");
    expect_keys(*it, {"level", "maxRedeliveries", "sequenceHeader", "endpoint"}, "qos");
    QosSection qos;
    if (auto f = it->find("level"); f != it->end()) {
      if (!f->is_string()) vfail("bad-type", "qos.level", "expected string");
      qos.level = f->get<std::string>();
    }
    if (auto f = it->find("maxRedeliveries"); f != it->end()) {
      if (!f->is_number_integer() || f->get<std::int64_t>() < 0)
        vfail("bad-type", "qos.maxRedeliveries", "expected non-negative integer");
      qos.maxRedeliveries = static_cast<int>(f->get<std::int64_t>());
    }
    if (auto f = it->find("sequenceHeader"); f != it->end()) {
      if (!f->is_string()) vfail("bad-type", "qos.sequenceHeader", "expected string");
      qos.sequenceHeader = f->get<std::string>();
    }
    if (auto f = it->find("endpoint"); f != it->end()) {
      if (!f->is_string()) vfail("bad-type", "qos.endpoint", "expected string");
      qos.endpoint = f->get<std::string>();
    }
    flow.qos = std::move(qos);
  }

  validate_flow(flow);
  return flow;
}

FlowDefinition parse_flow(const std::string& text) {
  return flow_from_doc(parse_json_doc(text));
}

namespace {

Doc steps_to_doc(const std::vector<Step>& steps);

Doc step_to_doc(const Step& step) {
  Doc node = Doc::object();
  node["type"] = step.type;
  node["name"] = step.name;
  if (!step.config.empty()) {
    Doc config = Doc::object();
    for (const auto& [key, value] : step.config) config[key] = value;
    node["config"] = std::move(config);
  }
  if (step.redelivery) {
    Doc r = Doc::object();
    r["maxAttempts"] = step.redelivery->maxAttempts;
    Doc delays = Doc::array();
    for (Tick t : step.redelivery->delays) delays.push_back(t);
    r["delays"] = std::move(delays);
    node["redelivery"] = std::move(r);
  }
  if (!step.steps.empty()) node["steps"] = steps_to_doc(step.steps);
  if (!step.branches.empty()) {
    Doc branches = Doc::array();
    for (const auto& branch : step.branches) {
      Doc b = Doc::object();
      b["name"] = branch.name;
      b["steps"] = steps_to_doc(branch.steps);
      branches.push_back(std::move(b));
    }
    node["branches"] = std::move(branches);
  }
  return node;
}

Doc steps_to_doc(const std::vector<Step>& steps) {
  Doc arr = Doc::array();
  for (const auto& step : steps) arr.push_back(step_to_doc(step));
  return arr;
}

Doc handlers_to_doc(const std::vector<ExceptionHandlerDef>& handlers) {
  Doc arr = Doc::array();
  for (const auto& handler : handlers) {
    Doc h = Doc::object();
    h["selector"] = handler.selector;
    h["mode"] = handler.mode == HandlerMode::resume ? "resume" : "rethrow";
    h["steps"] = steps_to_doc(handler.steps);
    arr.push_back(std::move(h));
  }
  return arr;
}

}  // namespace

Doc doc_from_flow(const FlowDefinition& flow) {
  Doc root = Doc::object();
  root["name"] = flow.name;
  if (!flow.parameters.empty()) {
    Doc params = Doc::object();
    for (const auto& [name, spec] : flow.parameters)
      params[name] = spec.defaultValue ? Doc(*spec.defaultValue) : Doc(nullptr);
    root["parameters"] = std::move(params);
  }
  root["steps"] = steps_to_doc(flow.steps);
  if (!flow.onException.empty())
    root["onException"] = handlers_to_doc(flow.onException);
  if (!flow.subprocesses.empty()) {
    Doc subs = Doc::object();
    for (const auto& [name, sub] : flow.subprocesses) {
      if (sub.onException.empty()) {
        subs[name] = steps_to_doc(sub.steps);
      } else {
        Doc s = Doc::object();
        s["steps"] = steps_to_doc(sub.steps);
        s["onException"] = handlers_to_doc(sub.onException);
        subs[name] = std::move(s);
      }
    }
    root["subprocesses"] = std::move(subs);
  }
  if (flow.qos) {
    Doc qos = Doc::object();
    qos["level"] = flow.qos->level;
    qos["maxRedeliveries"] = flow.qos->maxRedeliveries;
    if (!flow.qos->sequenceHeader.empty()) qos["sequenceHeader"] = flow.qos->sequenceHeader;
    if (!flow.qos->endpoint.empty()) qos["endpoint"] = flow.qos->endpoint;
    root["qos"] = std::move(qos);
  }
  return root;
}

std::string render_flow(const FlowDefinition& flow) {
  return doc_from_flow(flow).dump(2) + "\n";
}

namespace {

void substitute_string(std::string& value, const std::map<std::string, std::string>& values,
                       const std::string& where) {
  std::size_t pos = 0;
  while ((pos = value.find("${", pos)) != std::string::npos) {
    auto close = value.find('}', pos + 2);
    if (close == std::string::npos) vfail("bad-placeholder", where, value);
    std::string name = value.substr(pos + 2, close - pos - 2);
    auto it = values.find(name);
    if (it == values.end()) vfail("undeclared-parameter", where, name);
    value.replace(pos, close - pos + 1, it->second);
    pos += it->second.size();
  }
}

void substitute_steps(std::vector<Step>& steps,
                      const std::map<std::string, std::string>& values,
                      const std::string& where) {
  std::size_t i = 0;
  for (auto& step : steps) {
    std::string here = where + "[" + std::to_string(i) + "]";
    for (auto& [key, value] : step.config) substitute_string(value, values, here + "." + key);
    substitute_steps(step.steps, values, here + ".steps");
    for (auto& branch : step.branches)
      substitute_steps(branch.steps, values, here + ".branches");
    ++i;
  }
}

}  // namespace

FlowDefinition instantiate_template(const FlowDefinition& tmpl,
                                    const std::map<std::string, std::string>& bindings) {
  for (const auto& [name, value] : bindings) {
    (void)value;
    if (tmpl.parameters.find(name) == tmpl.parameters.end())
      vfail("unknown-binding", "bindings", name);
  }
  std::map<std::string, std::string> values;
  for (const auto& [name, spec] : tmpl.parameters) {
    if (auto it = bindings.find(name); it != bindings.end())
      values[name] = it->second;
    else if (spec.defaultValue)
      values[name] = *spec.defaultValue;
    else
      raise("MissingBinding", name);
  }

  FlowDefinition out = tmpl;
  substitute_steps(out.steps, values, "steps");
  for (auto& handler : out.onException)
    substitute_steps(handler.steps, values, "onException");
  for (auto& [name, sub] : out.subprocesses) {
    substitute_steps(sub.steps, values, "subprocesses." + name);
    for (auto& handler : sub.onException)
      substitute_steps(handler.steps, values, "subprocesses." + name + ".onException");
  }
  if (out.qos) {
    substitute_string(out.qos->sequenceHeader, values, "qos.sequenceHeader");
    substitute_string(out.qos->endpoint, values, "qos.endpoint");
  }
  validate_flow(out);
  return out;
}

}  // namespace patternflow
