#include <algorithm>
#include <charconv>
#include <thread>

#include "patternflow/document.hpp"
#include "patternflow/predicate.hpp"
#include "patternflow/runtime.hpp"
#include "patternflow/transform.hpp"

namespace patternflow {
namespace {

const std::string* find_cfg(const Step& step, const std::string& key) {
  auto it = step.config.find(key);
  return it == step.config.end() ? nullptr : &it->second;
}

std::string cfg(const Step& step, const std::string& key,
                const std::string& fallback = "") {
  const std::string* v = find_cfg(step, key);
  return v ? *v : fallback;
}

std::string cfg_req(const Step& step, const std::string& key) {
  const std::string* v = find_cfg(step, key);
  if (!v)
    raise("ConfigError",
          "step '" + step.name + "' (" + step.type + ") needs config '" + key + "'");
  return *v;
}

bool cfg_flag(const Step& step, const std::string& key, bool fallback) {
  const std::string* v = find_cfg(step, key);
  if (!v) return fallback;
  if (*v == "true") return true;
  if (*v == "false") return false;
  raise("ConfigError", "config '" + key + "' must be true|false, got '" + *v + "'");
}

std::uint64_t cfg_uint(const Step& step, const std::string& key,
                       std::uint64_t fallback) {
  const std::string* v = find_cfg(step, key);
  if (!v) return fallback;
  std::uint64_t value = 0;
  auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), value);
  if (ec != std::errc{} || p != v->data() + v->size())
    raise("ConfigError", "config '" + key + "' must be an integer, got '" + *v + "'");
  return value;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string current;
  for (char c : csv) {
    if (c == ',') {
      if (!current.empty()) out.push_back(current);
      current.clear();
    } else if (c != ' ') {
      current += c;
    }
  }
  if (!current.empty()) out.push_back(current);
  return out;
}

EncodingScheme scheme_from(const std::string& name) {
  if (name == "base64") return EncodingScheme::base64;
  if (name == "base16") return EncodingScheme::base16;
  raise("ConfigError", "unknown encoding scheme '" + name + "'");
}

DocFormat format_from(const std::string& name) {
  if (name == "json") return DocFormat::jsonLike;
  if (name == "xml") return DocFormat::xmlLike;
  raise("ConfigError", "unknown document format '" + name + "'");
}

std::vector<MappingRule> mapping_rules_from(const std::string& text) {
  Doc doc = parse_json_doc(text);
  if (!doc.is_array()) raise("ConfigError", "map rules must be a JSON array");
  std::vector<MappingRule> rules;
  for (const auto& node : doc) {
    if (!node.is_object())
      raise("ConfigError", "each map rule must be an object");
    MappingRule rule;
    if (node.contains("source")) rule.sourcePath = node["source"].get<std::string>();
    if (!node.contains("target"))
      raise("ConfigError", "map rule needs a 'target' path");
    rule.targetPath = node["target"].get<std::string>();
    std::string kind = node.value("kind", std::string("copy"));
    if (kind == "copy")
      rule.kind = MappingRule::Kind::copy;
    else if (kind == "uppercase")
      rule.kind = MappingRule::Kind::uppercase;
    else if (kind == "lowercase")
      rule.kind = MappingRule::Kind::lowercase;
    else if (kind == "constant")
      rule.kind = MappingRule::Kind::constant;
    else
      raise("ConfigError", "unknown map rule kind '" + kind + "'");
    if (rule.kind == MappingRule::Kind::constant)
      rule.constantValue = node.value("value", std::string());
    else if (rule.sourcePath.empty())
      raise("ConfigError", "map rule needs a 'source' path");
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::vector<std::pair<std::string, std::string>> replace_rules_from(
    const std::string& text) {
  Doc doc = parse_json_doc(text);
  if (!doc.is_object())
    raise("ConfigError", "replace rules must be a JSON object");
  std::vector<std::pair<std::string, std::string>> dict;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!it.value().is_string())
      raise("ConfigError", "replacement for '" + it.key() + "' must be a string");
    dict.emplace_back(it.key(), it.value().get<std::string>());
  }
  return dict;
}

std::set<MessagePart> parts_from(const std::string& csv) {
  std::set<MessagePart> parts;
  for (const auto& part : split_list(csv)) {
    if (part == "body")
      parts.insert(MessagePart::body);
    else if (part == "headers")
      parts.insert(MessagePart::headers);
    else if (part == "attachments")
      parts.insert(MessagePart::attachments);
    else
      raise("ConfigError", "unknown message part '" + part + "'");
  }
  if (parts.empty()) parts.insert(MessagePart::body);
  return parts;
}

Severity severity_from(const std::string& name) {
  if (name == "info") return Severity::info;
  if (name == "warn") return Severity::warn;
  if (name == "error") return Severity::error;
  raise("ConfigError", "unknown severity '" + name + "'");
}

}  // namespace

/// Drives one flow instance. Internal failures travel as Failure/Cancelled
/// (never PatternError) so the engine can distinguish its own control flow
/// from pattern errors raised by step bodies.
struct FlowExecutor {
  Runtime& rt;
  const FlowDefinition& def;
  std::string flowName;

  struct Failure {
    ExceptionRecord record;
  };
  struct Cancelled {};

  Exchange execute(const Message& input) {
    Exchange ex(input, rt.ids_.next());
    ex.set_property("flow", flowName);
    rt.inactivity_->activity("flow:" + flowName);
    Tick started = rt.clock_->now();
    try {
      run_scope(def.steps, def.onException, ex, "");
      rt.stats_->record("flow:" + flowName, StatOutcome::success,
                        rt.clock_->now() - started);
    } catch (Failure& f) {
      rt.stats_->record("flow:" + flowName, StatOutcome::failure,
                        rt.clock_->now() - started);
      ex.set_exception(f.record);
      rt.monitor_.record(ex);
      throw FlowError(std::move(f.record));
    } catch (Cancelled&) {
      rt.stats_->record("flow:" + flowName, StatOutcome::cancellation,
                        rt.clock_->now() - started);
      ex.set_property("cancelled", "true");
    }
    rt.monitor_.record(ex);
    return ex;
  }

  /// Runs steps with a handler chain attached to this scope (flow level or
  /// one subprocess). First matching handler wins; resume ends the scope
  /// normally, rethrow propagates the original failure.
  void run_scope(const std::vector<Step>& steps,
                 const std::vector<ExceptionHandlerDef>& handlers, Exchange& ex,
                 const std::string& prefix) {
    try {
      run_steps(steps, ex, prefix);
    } catch (Failure& f) {
      for (const auto& handler : handlers) {
        if (handler.selector != "*" && handler.selector != f.record.kind)
          continue;
        ex.set_exception(f.record);
        ex.set_property("exception.kind", f.record.kind);
        ex.set_property("exception.message", f.record.message);
        ex.set_property("exception.step", f.record.raisingStep);
        run_steps(handler.steps, ex, prefix);
        if (handler.mode == HandlerMode::resume) {
          ex.clear_exception();
          return;
        }
        throw;
      }
      throw;
    }
  }

  void run_steps(const std::vector<Step>& steps, Exchange& ex,
                 const std::string& prefix) {
    for (const Step& step : steps) run_step(step, ex, prefix);
  }

  void run_step(const Step& step, Exchange& ex, const std::string& prefix) {
    const std::string histName = prefix + step.name;
    if (rt.is_skipped(flowName, step.name)) {
      ex.record(histName, rt.clock_->now(), "skipped");
      return;
    }
    rt.notify_interceptors(ex, step, true);

    const int maxAttempts = step.redelivery ? step.redelivery->maxAttempts : 1;
    Message snapshotMessage = ex.message();
    auto snapshotProperties = ex.properties();
    std::uint32_t failures = 0;
    const std::string statName = "step:" + flowName + "/" + histName;

    for (int attempt = 1;; ++attempt) {
      Tick began = rt.clock_->now();
      try {
        invoke(step, ex, histName, prefix);
        ex.record(histName, rt.clock_->now(), "ok");
        rt.stats_->record(statName, StatOutcome::success,
                          rt.clock_->now() - began);
        if (step.redelivery)
          ex.set_property("redelivery.attempts", std::to_string(failures));
        rt.notify_interceptors(ex, step, false);
        return;
      } catch (Failure& f) {
        ++failures;
        ex.record(histName, rt.clock_->now(), "failed");
        rt.stats_->record(statName, StatOutcome::failure,
                          rt.clock_->now() - began);
        f.record.attemptCount = failures;
        if (attempt >= maxAttempts) {
          rt.notify_interceptors(ex, step, false);
          throw;
        }
        Tick delay = 0;
        const auto& delays = step.redelivery->delays;
        if (!delays.empty())
          delay = delays[std::min<std::size_t>(static_cast<std::size_t>(attempt) - 1,
                                               delays.size() - 1)];
        rt.clock_->advance(delay);
        // restore the pre-step snapshot for the retry
        ex.set_message(snapshotMessage);
        for (const auto& [k, v] : snapshotProperties) ex.set_property(k, v);
      } catch (Cancelled&) {
        ex.record(histName, rt.clock_->now(), "cancelled");
        rt.stats_->record(statName, StatOutcome::cancellation,
                          rt.clock_->now() - began);
        rt.notify_interceptors(ex, step, false);
        throw;
      }
    }
  }

  /// Converts pattern-level errors into engine failures carrying the step
  /// that raised them.
  void invoke(const Step& step, Exchange& ex, const std::string& histName,
              const std::string& prefix) {
    try {
      dispatch(step, ex, histName, prefix);
    } catch (Failure&) {
      throw;
    } catch (Cancelled&) {
      throw;
    } catch (const FlowError& e) {
      // nested flow failed (delegate); keep the original kind for selectors
      throw Failure{e.record()};
    } catch (const PatternError& e) {
      throw Failure{ExceptionRecord{e.kind(), e.detail(), histName, 1}};
    } catch (const std::exception& e) {
      throw Failure{ExceptionRecord{"InternalError", e.what(), histName, 1}};
    }
  }

  void dispatch(const Step& step, Exchange& ex, const std::string& histName,
                const std::string& prefix) {
    const Message& msg = ex.message();

    if (step.type == "map") {
      auto rules = mapping_rules_from(cfg_req(step, "rules"));
      ex.set_message(
          map_message(msg, rules, cfg_flag(step, "failOnMissing", true)));
    } else if (step.type == "encode") {
      ex.set_message(encode_content(msg, scheme_from(cfg(step, "scheme", "base64"))));
    } else if (step.type == "decode") {
      ex.set_message(decode_content(msg, scheme_from(cfg(step, "scheme", "base64"))));
    } else if (step.type == "marshal") {
      ex.set_message(marshal_content(msg, format_from(cfg_req(step, "from")),
                                     format_from(cfg_req(step, "to"))));
    } else if (step.type == "unmarshal") {
      ex.set_message(unmarshal_content(msg, format_from(cfg_req(step, "from"))));
    } else if (step.type == "compress") {
      ex.set_message(compress_content(msg));
    } else if (step.type == "decompress") {
      ex.set_message(decompress_content(msg));
    } else if (step.type == "convert") {
      std::string to = cfg_req(step, "to");
      ex.set_message(convert_type(
          msg, to == "text" ? TargetType::textUtf8 : TargetType::bytes));
    } else if (step.type == "sort") {
      ex.set_message(sort_content(msg, cfg(step, "delimiter", "\n"),
                                  cfg_flag(step, "numeric", false)
                                      ? SortComparator::numeric
                                      : SortComparator::lexicographic));
    } else if (step.type == "replace") {
      ex.set_message(find_replace(msg, replace_rules_from(cfg_req(step, "rules"))));
    } else if (step.type == "metadata") {
      ex.set_message(extract_metadata(msg));
    } else if (step.type == "encrypt") {
      std::string alias = cfg_req(step, "keyAlias");
      rt.provision_alias(alias);
      ex.set_message(encrypt_message(msg, rt.keystore_, alias,
                                     parts_from(cfg(step, "parts", "body")),
                                     rt.crypto_));
    } else if (step.type == "decrypt") {
      std::string alias = cfg_req(step, "keyAlias");
      rt.provision_alias(alias);
      ex.set_message(decrypt_message(msg, rt.keystore_, alias, rt.crypto_));
    } else if (step.type == "sign") {
      std::string alias = cfg_req(step, "keyAlias");
      rt.provision_alias(alias);
      ex.set_message(sign_message(msg, rt.keystore_, alias, rt.crypto_));
    } else if (step.type == "verify") {
      std::string alias = cfg_req(step, "trustAlias");
      rt.provision_alias(alias);
      verify_message(ex, rt.truststore_, alias, rt.crypto_);
    } else if (step.type == "authorize") {
      auto roleList = split_list(cfg(step, "roles"));
      std::set<std::string> roles(roleList.begin(), roleList.end());
      authorize(ex, roles, *rt.tokens_, rt.audit_.get());
    } else if (step.type == "throw") {
      throw Failure{ExceptionRecord{cfg_req(step, "kind"),
                                    cfg(step, "message"), histName, 1}};
    } else if (step.type == "validate") {
      step_validate(step, ex, histName);
    } else if (step.type == "cancel") {
      std::string condition = cfg(step, "condition");
      if (condition.empty() || Predicate::parse(condition).eval(ex))
        throw Cancelled{};
    } else if (step.type == "indicator") {
      Indicator ind = rt.indicators_->raise(
          severity_from(cfg(step, "severity", "warn")),
          cfg(step, "source", histName),
          cfg(step, "message", "indicator raised"));
      ex.set_property("indicator.id", ind.id);
    } else if (step.type == "request") {
      step_request(step, ex, histName);
    } else if (step.type == "store-put") {
      PutOptions opts;
      opts.ttl = static_cast<std::uint32_t>(cfg_uint(step, "ttl", 0));
      if (cfg(step, "visibility", "global") == "local") {
        opts.visibility = Visibility::local;
        opts.scope = flowName;
      }
      rt.stores_->open(cfg_req(step, "store"))
          ->put(cfg_req(step, "key"), msg.body(), opts);
    } else if (step.type == "store-get") {
      Bytes value =
          rt.stores_->open(cfg_req(step, "store"))->get(cfg_req(step, "key"), flowName);
      ex.set_message(msg.with_body(std::move(value)));
    } else if (step.type == "store-remove") {
      bool removed =
          rt.stores_->open(cfg_req(step, "store"))->remove(cfg_req(step, "key"));
      ex.set_property("removed", removed ? "true" : "false");
    } else if (step.type == "multicast") {
      step_multicast(step, ex, histName);
    } else if (step.type == "join") {
      auto inputs = split_list(cfg_req(step, "inputs"));
      std::string output = cfg_req(step, "output");
      rt.wire_join(inputs, output);
      if (!inputs.empty()) rt.channel_or_create(inputs.front())->send(msg);
    } else if (step.type == "delegate") {
      step_delegate(step, ex);
    } else if (step.type == "loop") {
      step_loop(step, ex, histName);
    } else if (step.type == "subprocess") {
      std::string name = cfg_req(step, "name");
      SubprocessDef sub;
      if (auto it = def.subprocesses.find(name); it != def.subprocesses.end()) {
        sub = it->second;
      } else if (auto found = rt.shared_subprocess(name)) {
        sub = std::move(*found);
      } else {
        raise("UnknownSubprocess", "no subprocess '" + name + "'");
      }
      run_scope(sub.steps, sub.onException, ex, prefix + "sub:" + name + "/");
    } else if (step.type.rfind("custom:", 0) == 0) {
      std::string name = step.type.substr(7);
      Processor fn;
      {
        std::lock_guard lock(rt.mutex_);
        auto it = rt.processors_.find(name);
        if (it == rt.processors_.end())
          raise("UnknownProcessor", "no processor '" + name + "' registered");
        fn = it->second;
      }
      fn(ex, rt);
    } else {
      raise("UnknownStep", "unsupported step type '" + step.type + "'");
    }
  }

  void step_validate(const Step& step, Exchange& ex, const std::string& histName) {
    auto fail = [&](const std::string& rule) {
      throw Failure{ExceptionRecord{"validation", rule, histName, 1}};
    };
    if (const std::string* required = find_cfg(step, "headerRequired"))
      for (const auto& name : split_list(*required))
        if (!ex.message().header(name)) fail("headerRequired " + name);
    if (cfg_flag(step, "bodyNonEmpty", false) && ex.message().body().empty())
      fail("bodyNonEmpty");
    if (const std::string* expr = find_cfg(step, "predicate"))
      if (!Predicate::parse(*expr).eval(ex)) fail("predicate");
  }

  void step_request(const Step& step, Exchange& ex, const std::string& histName) {
    std::string endpointName = cfg_req(step, "endpoint");
    Tick timeout = cfg_uint(step, "timeout", 100);
    auto endpoint = rt.simulators_.get(endpointName);
    CircuitBreaker* breaker =
        cfg_flag(step, "breaker", false) ? rt.breaker_for(endpointName).get() : nullptr;

    CommandResult result =
        command_execute(*endpoint, ex.message(), timeout, *rt.clock_, breaker,
                        nullptr, &rt.channelMonitor_);
    ex.set_property("request.outcome", outcome_name(result.outcome));
    ex.set_property("request.latency", std::to_string(result.latency));

    if (result.outcome == CommandOutcome::ok) {
      ex.set_message(*result.response);
      return;
    }
    if (!cfg_flag(step, "failOnError", true)) return;
    std::string kind = result.outcome == CommandOutcome::timedOut ? "Timeout"
                       : result.outcome == CommandOutcome::shortCircuited
                           ? "CircuitOpen"
                           : "EndpointError";
    throw Failure{ExceptionRecord{
        kind, "endpoint '" + endpointName + "' " + outcome_name(result.outcome),
        histName, 1}};
  }

  void step_delegate(const Step& step, Exchange& ex) {
    std::string target = cfg_req(step, "target");
    std::string mode = cfg(step, "mode", "sync");
    if (mode == "async") {
      rt.enqueue(target, ex.message());
      return;
    }
    Exchange result = rt.run_flow(target, ex.message());
    ex.set_message(result.message());
  }

  void step_loop(const Step& step, Exchange& ex, const std::string& histName) {
    Predicate condition = Predicate::parse(cfg_req(step, "condition"));
    std::uint64_t maxIterations = cfg_uint(step, "maxIterations", 1);
    if (maxIterations < 1) raise("ConfigError", "maxIterations must be >= 1");

    std::uint64_t count = 0;
    while (count < maxIterations && condition.eval(ex)) {
      run_steps(step.steps, ex, histName + "/");
      ++count;
    }
    ex.set_property("loop.count", std::to_string(count));
    if (condition.eval(ex) && count >= maxIterations) {
      if (cfg(step, "failMode", "fail") == "fail")
        raise("LoopLimitExceeded", "condition still true after " +
                                       std::to_string(maxIterations) +
                                       " iterations");
      rt.indicators_->raise(Severity::warn, histName,
                            "loop limit reached after " +
                                std::to_string(maxIterations) + " iterations");
    }
  }

  void step_multicast(const Step& step, Exchange& ex,
                      const std::string& histName) {
    const std::size_t n = step.branches.size();
    std::vector<Exchange> copies;
    copies.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      Exchange copy(ex.message(), ex.instance_id());
      for (const auto& [k, v] : ex.properties()) copy.set_property(k, v);
      copies.push_back(std::move(copy));
    }

    std::vector<std::optional<ExceptionRecord>> failed(n);
    std::vector<bool> cancelled(n, false);

    auto runBranch = [&](std::size_t i) {
      const Branch& branch = step.branches[i];
      std::string branchPrefix = histName + "/" + branch.name + "/";
      try {
        run_steps(branch.steps, copies[i], branchPrefix);
      } catch (Failure& f) {
        failed[i] = f.record;
        copies[i].set_exception(f.record);
      } catch (Cancelled&) {
        cancelled[i] = true;
      }
    };

    if (cfg(step, "mode", "sequential") == "parallel") {
      std::vector<std::thread> workers;
      workers.reserve(n);
      for (std::size_t i = 0; i < n; ++i)
        workers.emplace_back(runBranch, i);
      for (auto& w : workers) w.join();
    } else {
      for (std::size_t i = 0; i < n; ++i) runBranch(i);
    }

    // Branch histories surface on the parent, in declaration order.
    for (std::size_t i = 0; i < n; ++i)
      for (const auto& entry : copies[i].history())
        ex.record(entry.step, entry.timestamp, entry.outcome);

    std::size_t successes = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (!failed[i] && !cancelled[i]) ++successes;

    if (successes == 0)
      for (std::size_t i = 0; i < n; ++i)
        if (failed[i]) throw Failure{*failed[i]};

    if (const std::string* adopt = find_cfg(step, "adopt")) {
      for (std::size_t i = 0; i < n; ++i)
        if (step.branches[i].name == *adopt && !failed[i] && !cancelled[i])
          ex.set_message(copies[i].message());
    }
  }
};

Exchange Runtime::execute(const FlowDefinition& def, const std::string& flowName,
                          const Message& input) {
  FlowExecutor executor{*this, def, flowName};
  return executor.execute(input);
}

}  // namespace patternflow
