#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "patternflow/cli.hpp"
#include "patternflow/flowdoc.hpp"
#include "patternflow/qos.hpp"
#include "patternflow/runtime.hpp"

namespace patternflow {
namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise("IoError", "cannot read '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise("IoError", "cannot write '" + path + "'");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

std::string resolve_data_dir(const std::string& flagValue) {
  if (!flagValue.empty()) return flagValue;
  const char* env = std::getenv("PATTERNFLOW_DATA_DIR");
  return env ? env : "";
}

std::map<std::string, std::string> parse_kv(const std::vector<std::string>& items,
                                            const char* what) {
  std::map<std::string, std::string> out;
  for (const auto& item : items) {
    auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      raise("UsageError", std::string(what) + " must look like key=value, got '" +
                              item + "'");
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

/// Fault profile document:
///   {"seed": n?, "messages": n?, "endpoints": {"<name>": {
///       "sendLossRate": p?, "ackLossRate": p?,
///       "entries": [{"afterRequest": n, "outcome": "ok|error|hang",
///                    "latencyTicks": n?, "dropAck": b?, "duplicate": b?}]}}}
void apply_fault_profile(const Doc& profile, Runtime& rt) {
  if (!profile.is_object())
    raise("ConfigError", "fault profile must be a JSON object");
  if (!profile.contains("endpoints")) return;
  const Doc& endpoints = profile.at("endpoints");
  if (!endpoints.is_object())
    raise("ConfigError", "fault profile 'endpoints' must be an object");

  for (auto it = endpoints.begin(); it != endpoints.end(); ++it) {
    const Doc& spec = it.value();
    auto sim = rt.simulators().get(it.key());
    sim->set_loss_rates(spec.value("sendLossRate", 0.0),
                        spec.value("ackLossRate", 0.0));
    if (!spec.contains("entries")) continue;
    std::vector<BehaviorEntry> script;
    for (const Doc& node : spec.at("entries")) {
      BehaviorEntry entry;
      entry.afterRequest = node.at("afterRequest").get<std::uint64_t>();
      std::string outcome = node.value("outcome", std::string("ok"));
      if (outcome == "ok")
        entry.outcome = SimOutcome::ok;
      else if (outcome == "error")
        entry.outcome = SimOutcome::error;
      else if (outcome == "hang")
        entry.outcome = SimOutcome::hang;
      else
        raise("ConfigError", "unknown outcome '" + outcome + "' in fault profile");
      entry.latencyTicks = node.value("latencyTicks", std::uint64_t{1});
      entry.dropAck = node.value("dropAck", false);
      entry.duplicate = node.value("duplicate", false);
      script.push_back(entry);
    }
    sim->set_script(std::move(script));
  }
}

int do_validate(const std::string& flowPath) {
  FlowDefinition flow = parse_flow(read_file(flowPath));
  std::cout << "valid: " << flow.name << " (" << flow.steps.size()
            << " steps)\n";
  return 0;
}

int do_run(const std::string& flowPath, const std::string& inputPath,
           const std::string& outputPath, const std::string& dataDir,
           std::uint64_t seed, const std::vector<std::string>& headerKVs,
           const std::vector<std::string>& bindKVs,
           const std::string& faultsPath) {
  FlowDefinition flow = parse_flow(read_file(flowPath));
  flow = instantiate_template(flow, parse_kv(bindKVs, "--bind"));

  RuntimeOptions options;
  options.seed = seed;
  options.dataDir = resolve_data_dir(dataDir);
  Runtime rt(options);
  rt.register_flow(flow);
  if (!faultsPath.empty())
    apply_fault_profile(parse_json_doc(read_file(faultsPath)), rt);

  Bytes body;
  if (!inputPath.empty()) body = to_bytes(read_file(inputPath));
  HeaderMap headers;
  for (const auto& [k, v] : parse_kv(headerKVs, "--header")) headers[k] = v;

  Exchange result = rt.run_flow(flow.name, rt.create_message(std::move(body), headers));
  rt.drain_all();

  std::string out = to_string(result.message().body());
  if (outputPath.empty())
    std::cout << out;
  else
    write_file(outputPath, out);
  return 0;
}

int do_simulate(const std::string& flowPath, const std::string& faultsPath,
                const std::string& dataDir, std::uint64_t seedFlag,
                bool seedGiven, const std::string& reportPath) {
  FlowDefinition flow = parse_flow(read_file(flowPath));
  flow = instantiate_template(flow, {});
  if (!flow.qos)
    raise("ConfigError", "flow '" + flow.name + "' has no qos section to simulate");
  const QosSection& qos = *flow.qos;

  Doc profile = parse_json_doc(read_file(faultsPath));
  if (!profile.is_object())
    raise("ConfigError", "fault profile must be a JSON object");
  std::uint64_t seed =
      seedGiven ? seedFlag : profile.value("seed", std::uint64_t{1});
  std::uint64_t count = profile.value("messages", std::uint64_t{100});

  RuntimeOptions options;
  options.seed = seed;
  options.dataDir = resolve_data_dir(dataDir);
  Runtime rt(options);
  apply_fault_profile(profile, rt);

  QosConfig cfg;
  cfg.level = qos_level_from(qos.level);
  cfg.maxRedeliveries = qos.maxRedeliveries;
  cfg.sequenceHeader = qos.sequenceHeader.empty() ? "seq" : qos.sequenceHeader;
  cfg.dedupStore = std::make_shared<DataStore>("dedup", "", rt.clock_ptr());

  std::vector<Message> messages;
  messages.reserve(count);
  for (std::uint64_t i = 1; i <= count; ++i)
    messages.push_back(rt.create_message("msg-" + std::to_string(i),
                                         {{cfg.sequenceHeader, std::to_string(i)}}));

  auto endpoint = rt.simulators().get(qos.endpoint);
  DeliveryReport report = deliver_with_qos(cfg, messages, *endpoint, rt.clock());

  std::string text = report.to_json().dump(2) + "\n";
  if (reportPath.empty())
    std::cout << text;
  else
    write_file(reportPath, text);
  return 0;
}

int do_stats(const std::string& dataDir) {
  std::string dir = resolve_data_dir(dataDir);
  if (dir.empty())
    raise("UsageError", "stats needs --data-dir or PATTERNFLOW_DATA_DIR");
  RuntimeOptions options;
  options.dataDir = dir;
  Runtime rt(options);

  std::cout << "component\tinvocations\tsuccesses\tfailures\tcancellations"
               "\tlatency_min\tlatency_max\tlatency_sum\n";
  for (const auto& component : rt.stats().components()) {
    StatRecord rec = rt.stats().query(component);
    std::cout << rec.component << '\t' << rec.invocations << '\t'
              << rec.successes << '\t' << rec.failures << '\t'
              << rec.cancellations << '\t' << rec.latencyMin << '\t'
              << rec.latencyMax << '\t' << rec.latencySum << '\n';
  }
  return 0;
}

int do_indicators(const std::string& dataDir) {
  std::string dir = resolve_data_dir(dataDir);
  if (dir.empty())
    raise("UsageError", "indicators needs --data-dir or PATTERNFLOW_DATA_DIR");
  RuntimeOptions options;
  options.dataDir = dir;
  Runtime rt(options);

  std::cout << "id\tseverity\tsource\tmessage\traised_at\tacknowledged\n";
  for (const Indicator& ind : rt.indicators().all())
    std::cout << ind.id << '\t' << severity_name(ind.severity) << '\t'
              << ind.source << '\t' << ind.message << '\t' << ind.raisedAt
              << '\t' << (ind.acknowledged ? "yes" : "no") << '\n';
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"patternflow: runs integration pattern flows against simulated endpoints"};
  app.require_subcommand(1);

  std::string flowPath, inputPath, outputPath, dataDir, faultsPath, reportPath;
  std::vector<std::string> headerKVs, bindKVs;
  std::uint64_t seed = 1;

  CLI::App* run = app.add_subcommand("run", "Execute a flow on an input message");
  run->add_option("flow", flowPath, "Flow document (JSON)")->required();
  run->add_option("--input", inputPath, "File whose bytes become the message body");
  run->add_option("--output", outputPath, "Write the result body here (default stdout)");
  run->add_option("--data-dir", dataDir, "Directory for persisted state");
  run->add_option("--seed", seed, "Deterministic runtime seed");
  run->add_option("--header", headerKVs, "Message header key=value (repeatable)");
  run->add_option("--bind", bindKVs, "Template binding key=value (repeatable)");
  run->add_option("--faults", faultsPath, "Fault profile applied to endpoints before the run");

  CLI::App* validate = app.add_subcommand("validate", "Parse and validate a flow document");
  validate->add_option("flow", flowPath, "Flow document (JSON)")->required();

  CLI::App* simulate = app.add_subcommand(
      "simulate", "Deliver a message batch through the flow's qos endpoint under faults");
  simulate->add_option("flow", flowPath, "Flow document (JSON)")->required();
  CLI::Option* faultsOpt =
      simulate->add_option("--faults", faultsPath, "Fault profile (JSON)");
  faultsOpt->required();
  CLI::Option* seedOpt = simulate->add_option("--seed", seed, "Overrides the profile seed");
  simulate->add_option("--report", reportPath, "Write the delivery report here (default stdout)");
  simulate->add_option("--data-dir", dataDir, "Directory for persisted state");

  CLI::App* stats = app.add_subcommand("stats", "Print persisted component statistics");
  stats->add_option("--data-dir", dataDir, "Directory holding persisted state");

  CLI::App* indicators = app.add_subcommand("indicators", "Print persisted indicators");
  indicators->add_option("--data-dir", dataDir, "Directory holding persisted state");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed())
      return do_run(flowPath, inputPath, outputPath, dataDir, seed, headerKVs,
                    bindKVs, faultsPath);
    if (validate->parsed()) return do_validate(flowPath);
    if (simulate->parsed())
      return do_simulate(flowPath, faultsPath, dataDir, seed,
                         seedOpt->count() > 0, reportPath);
    if (stats->parsed()) return do_stats(dataDir);
    if (indicators->parsed()) return do_indicators(dataDir);
  } catch (const FlowError& e) {
    std::cerr << "flow error: " << e.what() << "\n";
    return 1;
  } catch (const PatternError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == "FlowStopped" ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace patternflow
