#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <string>

#include "patternflow/errors.hpp"
#include "patternflow/flowdoc.hpp"

using namespace patternflow;

// Returns "<kind>: <message>" so tests can pin both the error kind and the
// violated rule in one comparison.
static std::string err_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const PatternError& e) {
    return std::string(e.kind()) + ": " + e.what();
  }
  return "";
}

static void check_rule(const std::string& flowJson, const std::string& rule) {
  std::string got = err_of([&] { parse_flow(flowJson); });
  INFO("flow: " << flowJson << "\ngot: " << got);
  CHECK(got.rfind("ValidationError: ", 0) == 0);
  CHECK(got.find(rule) != std::string::npos);
}

static const char* kRichFlow = R"({
  "name": "fulfillment",
  "parameters": {"region": "eu", "endpoint": null},
  "steps": [
    {"type": "map", "name": "shape",
     "config": {"rules": "[{\"source\": \"a\", \"target\": \"b\"}]"}},
    {"type": "encode", "config": {"scheme": "base64"},
     "redelivery": {"maxAttempts": 3, "delays": [5, 10]}},
    {"type": "loop", "config": {"condition": "bodySize() > 0", "maxIterations": "4"},
     "steps": [{"type": "compress"}]},
    {"type": "multicast", "config": {"mode": "parallel", "adopt": "fast"},
     "branches": [
       {"name": "fast", "steps": [{"type": "request", "config": {"endpoint": "${endpoint}"}}]},
       {"name": "slow", "steps": [{"type": "subprocess", "config": {"name": "archive"}}]}
     ]}
  ],
  "onException": [
    {"selector": "Timeout", "mode": "rethrow",
     "steps": [{"type": "indicator", "config": {"severity": "warn", "message": "late"}}]},
    {"selector": "*", "steps": []}
  ],
  "subprocesses": {
    "archive": {"steps": [{"type": "store-put",
                           "config": {"store": "archive", "key": "${region}"}}],
                "onException": [{"selector": "*", "steps": []}]},
    "audit": [{"type": "metadata"}]
  },
  "qos": {"level": "exactlyOnceInOrder", "maxRedeliveries": 4,
          "sequenceHeader": "seq", "endpoint": "sink"}
})";

TEST_CASE("a parsed flow survives the render round trip unchanged") {
  FlowDefinition flow = parse_flow(kRichFlow);
  CHECK(parse_flow(render_flow(flow)) == flow);
  CHECK(flow_from_doc(doc_from_flow(flow)) == flow);

  // Rendering is canonical: a second round trip produces identical text.
  std::string text = render_flow(flow);
  CHECK(render_flow(parse_flow(text)) == text);
}

TEST_CASE("parsed sections land in the model") {
  FlowDefinition flow = parse_flow(kRichFlow);
  CHECK(flow.name == "fulfillment");
  CHECK(flow.parameters.at("region").defaultValue == "eu");
  CHECK_FALSE(flow.parameters.at("endpoint").defaultValue.has_value());
  REQUIRE(flow.steps.size() == 4);
  CHECK(flow.steps[0].name == "shape");
  REQUIRE(flow.steps[1].redelivery.has_value());
  CHECK(flow.steps[1].redelivery->maxAttempts == 3);
  CHECK(flow.steps[1].redelivery->delays == std::vector<Tick>{5, 10});
  CHECK(flow.steps[3].branches.size() == 2);
  CHECK(flow.onException.size() == 2);
  CHECK(flow.onException[0].mode == HandlerMode::rethrow);
  CHECK(flow.onException[1].mode == HandlerMode::resume);  // the default
  CHECK(flow.subprocesses.count("archive") == 1);
  CHECK(flow.subprocesses.at("audit").steps.size() == 1);  // array shorthand
  REQUIRE(flow.qos.has_value());
  CHECK(flow.qos->level == "exactlyOnceInOrder");
  CHECK(flow.qos->maxRedeliveries == 4);
}

TEST_CASE("unnamed steps get positional names per nesting level") {
  FlowDefinition flow = parse_flow(R"({
    "name": "f",
    "steps": [
      {"type": "metadata"},
      {"type": "loop", "config": {"condition": "bodySize() > 0", "maxIterations": "2"},
       "steps": [{"type": "compress"}, {"type": "decompress"}]},
      {"type": "encode"}
    ]
  })");
  CHECK(flow.steps[0].name == "metadata#1");
  CHECK(flow.steps[1].name == "loop#2");
  CHECK(flow.steps[2].name == "encode#3");
  CHECK(flow.steps[1].steps[0].name == "compress#1");  // numbering restarts
  CHECK(flow.steps[1].steps[1].name == "decompress#2");
}

TEST_CASE("malformed json reports a parse error with the offset") {
  std::string got = err_of([] { parse_flow("{ \"name\": }"); });
  CHECK(got.rfind("ParseError: ", 0) == 0);
  CHECK(got.find("offset") != std::string::npos);
}

TEST_CASE("structural rules reject documents that are not flows") {
  check_rule("[]", "not-an-object");
  check_rule(R"({"name": "f", "steps": [], "bogus": 1})", "unknown-field");
  check_rule(R"({"steps": []})", "missing-field");
  check_rule(R"({"name": "f"})", "missing-field");
  check_rule(R"({"name": "", "steps": []})", "missing-name");
  check_rule(R"({"name": 4, "steps": []})", "bad-type");
  check_rule(R"({"name": "f", "steps": {}})", "bad-type");
  check_rule(R"({"name": "f", "steps": [], "parameters": []})", "bad-type");
  check_rule(R"({"name": "f", "steps": [], "parameters": {"p": 9}})", "bad-type");
  check_rule(R"({"name": "f", "steps": [], "parameters": {"": "x"}})", "bad-parameter");
  check_rule(R"({"name": "f", "steps": [], "subprocesses": {"": []}})", "bad-subprocess");
  check_rule(R"({"name": "f", "steps": [], "subprocesses": {"s": 3}})", "bad-type");
}

TEST_CASE("step rules enforce the closed vocabulary and its configuration") {
  auto flow_with = [](const std::string& stepJson) {
    return R"({"name": "f", "steps": [)" + stepJson + "]}";
  };

  check_rule(flow_with(R"({"type": "teleport"})"), "unknown-step-type");
  check_rule(flow_with(R"({"type": "custom:"})"), "unknown-step-type");
  check_rule(flow_with(R"({"type": "map"})"), "missing-config");
  check_rule(flow_with(R"({"type": "metadata", "config": {"note": null}})"), "bad-type");
  check_rule(flow_with(R"({"type": "convert", "config": {"to": "paper"}})"), "bad-config");
  check_rule(flow_with(R"({"type": "encode", "config": {"scheme": "base32"}})"), "bad-config");
  check_rule(flow_with(
      R"({"type": "loop", "config": {"condition": "x", "maxIterations": "0"}, "steps": []})"),
      "bad-config");
  check_rule(flow_with(
      R"({"type": "encode", "redelivery": {"maxAttempts": 0}})"), "bad-redelivery");
  check_rule(flow_with(
      R"({"type": "encode", "redelivery": {"maxAttempts": 2, "delays": [-1]}})"),
      "bad-redelivery");
  check_rule(flow_with(R"({"type": "encode", "config": {"scheme": "${nope}"}})"),
             "undeclared-parameter");
  check_rule(flow_with(R"({"type": "encode", "config": {"scheme": "${broken"}})"),
             "bad-placeholder");
  check_rule(flow_with(R"({"type": "multicast", "branches": []})"), "missing-branches");
  check_rule(flow_with(
      R"({"type": "multicast", "branches": [{"name": "a", "steps": []}, {"name": "a", "steps": []}]})"),
      "duplicate-branch");
  check_rule(flow_with(
      R"({"type": "multicast", "config": {"adopt": "c"}, "branches": [{"name": "a", "steps": []}]})"),
      "unknown-branch");
  check_rule(flow_with(
      R"({"type": "metadata", "branches": [{"name": "a", "steps": []}]})"),
      "unexpected-branches");
  check_rule(flow_with(R"({"type": "metadata", "steps": [{"type": "metadata"}]})"),
             "unexpected-steps");
  check_rule(flow_with(R"({"type": "subprocess", "config": {"name": "ghost"}})"),
             "unknown-subprocess");
}

TEST_CASE("handler and qos rules") {
  check_rule(R"({"name": "f", "steps": [],
                 "onException": [{"selector": "", "steps": []}]})",
             "missing-selector");
  check_rule(R"({"name": "f", "steps": [],
                 "onException": [{"selector": "*", "mode": "panic", "steps": []}]})",
             "bad-config");
  check_rule(R"({"name": "f", "steps": [], "qos": {"level": "sometimes", "endpoint": "e"}})",
             "bad-qos-level");
  check_rule(R"({"name": "f", "steps": [], "qos": {"level": "bestEffort"}})",
             "missing-config");
  check_rule(R"({"name": "f", "steps": [],
                 "qos": {"level": "exactlyOnceInOrder", "endpoint": "e"}})",
             "missing-config");
  check_rule(R"({"name": "f", "steps": [],
                 "qos": {"level": "bestEffort", "endpoint": "e", "maxRedeliveries": -1}})",
             "bad-type");
}

TEST_CASE("subprocess references must resolve and stay acyclic") {
  check_rule(R"({
    "name": "f", "steps": [{"type": "subprocess", "config": {"name": "a"}}],
    "subprocesses": {
      "a": [{"type": "subprocess", "config": {"name": "b"}}],
      "b": [{"type": "subprocess", "config": {"name": "a"}}]
    }
  })", "cycle");
  check_rule(R"({
    "name": "f", "steps": [],
    "subprocesses": {"a": [{"type": "subprocess", "config": {"name": "a"}}]}
  })", "cycle");
}

TEST_CASE("a shared registry satisfies otherwise-unresolved subprocess refs") {
  FlowDefinition flow;
  flow.name = "f";
  Step call;
  call.type = "subprocess";
  call.name = "call#1";
  call.config["name"] = "shared-cleanup";
  flow.steps.push_back(call);

  CHECK(err_of([&] { validate_flow(flow); })
            .find("unknown-subprocess") != std::string::npos);
  validate_flow(flow, {"shared-cleanup"});  // resolves, no throw
}

TEST_CASE("template instantiation substitutes without touching the template") {
  FlowDefinition tmpl = parse_flow(kRichFlow);
  std::string before = render_flow(tmpl);

  FlowDefinition flow = instantiate_template(tmpl, {{"endpoint", "face-sim"}});
  CHECK(render_flow(tmpl) == before);  // purity: the template is untouched

  // Bound value lands where the placeholder was; defaults fill the rest.
  CHECK(flow.steps[3].branches[0].steps[0].config.at("endpoint") == "face-sim");
  CHECK(flow.subprocesses.at("archive").steps[0].config.at("key") == "eu");
  CHECK(render_flow(flow).find("${") == std::string::npos);
}

TEST_CASE("instantiation composes placeholders inside larger strings") {
  FlowDefinition tmpl = parse_flow(R"({
    "name": "f",
    "parameters": {"region": null, "tier": "gold"},
    "steps": [{"type": "store-put",
               "config": {"store": "s", "key": "${region}/${tier}/latest"}}]
  })");
  FlowDefinition flow = instantiate_template(tmpl, {{"region", "eu"}});
  CHECK(flow.steps[0].config.at("key") == "eu/gold/latest");
}

TEST_CASE("instantiation rejects missing and unknown bindings") {
  FlowDefinition tmpl = parse_flow(kRichFlow);
  std::string missing = err_of([&] { instantiate_template(tmpl, {}); });
  CHECK(missing.rfind("MissingBinding", 0) == 0);
  CHECK(missing.find("endpoint") != std::string::npos);

  std::string unknown = err_of([&] {
    instantiate_template(tmpl, {{"endpoint", "e"}, {"color", "red"}});
  });
  CHECK(unknown.rfind("ValidationError", 0) == 0);
  CHECK(unknown.find("unknown-binding") != std::string::npos);
}

TEST_CASE("the step vocabulary is closed but custom names are open") {
  for (const char* type :
       {"map", "encode", "decode", "marshal", "unmarshal", "compress",
        "decompress", "convert", "sort", "replace", "metadata", "multicast",
        "join", "delegate", "loop", "subprocess", "encrypt", "decrypt", "sign",
        "verify", "authorize", "validate", "throw", "cancel", "request",
        "indicator", "store-put", "store-get", "store-remove"})
    CHECK(is_known_step_type(type));

  CHECK(is_known_step_type("custom:enrich"));
  CHECK_FALSE(is_known_step_type("custom:"));
  CHECK_FALSE(is_known_step_type("teleport"));
  CHECK_FALSE(is_known_step_type(""));
}
