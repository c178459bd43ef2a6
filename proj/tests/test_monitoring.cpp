#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <vector>

#include "patternflow/errors.hpp"
#include "patternflow/monitoring.hpp"
#include "patternflow/rng.hpp"

using namespace patternflow;

static std::string err_kind(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const PatternError& e) {
    return e.kind();
  }
  return "";
}

static std::shared_ptr<DataStore> memory_store(const std::string& name) {
  return std::make_shared<DataStore>(name, "", std::make_shared<ManualClock>());
}

TEST_CASE("stats aggregate outcomes and latency extremes per component") {
  StatsRegistry stats;
  stats.record("step:a", StatOutcome::success, 7);
  stats.record("step:a", StatOutcome::failure, 3);
  stats.record("step:a", StatOutcome::cancellation, 12);
  stats.record("step:b", StatOutcome::success, 1);

  StatRecord a = stats.query("step:a");
  CHECK(a.invocations == 3);
  CHECK(a.successes == 1);
  CHECK(a.failures == 1);
  CHECK(a.cancellations == 1);
  CHECK(a.latencyMin == 3);
  CHECK(a.latencyMax == 12);
  CHECK(a.latencySum == 22);

  CHECK(stats.components() == std::vector<std::string>{"step:a", "step:b"});
  CHECK(err_kind([&] { stats.query("step:c"); }) == "UnknownComponent");
}

TEST_CASE("the first latency sample seeds both extremes") {
  StatsRegistry stats;
  stats.record("x", StatOutcome::success, 9);
  StatRecord rec = stats.query("x");
  CHECK(rec.latencyMin == 9);
  CHECK(rec.latencyMax == 9);
}

TEST_CASE("persisted stats survive a registry restart") {
  auto store = memory_store("stats");
  {
    StatsRegistry stats(store);
    stats.record("flow:orders", StatOutcome::success, 5);
    stats.record("flow:orders", StatOutcome::failure, 11);
  }
  StatsRegistry revived(store);
  StatRecord rec = revived.query("flow:orders");
  CHECK(rec.invocations == 2);
  CHECK(rec.successes == 1);
  CHECK(rec.failures == 1);
  CHECK(rec.latencyMin == 5);
  CHECK(rec.latencyMax == 11);
  CHECK(rec.latencySum == 16);

  // Counting continues from the revived totals.
  revived.record("flow:orders", StatOutcome::success, 2);
  CHECK(revived.query("flow:orders").invocations == 3);
  CHECK(revived.query("flow:orders").latencyMin == 2);
}

TEST_CASE("indicators carry their raise time and acknowledge one-way") {
  auto clock = std::make_shared<ManualClock>();
  IndicatorLog log(nullptr, clock);
  clock->advance(40);
  Indicator first = log.raise(Severity::warn, "flow:a", "queue is backing up");
  Indicator second = log.raise(Severity::error, "flow:b", "endpoint down");

  CHECK(first.id == "ind-00000000");
  CHECK(second.id == "ind-00000001");
  CHECK(first.raisedAt == 40);
  CHECK_FALSE(first.acknowledged);

  log.acknowledge(first.id);
  auto all = log.all();
  REQUIRE(all.size() == 2);
  CHECK(all[0].acknowledged);
  CHECK_FALSE(all[1].acknowledged);
  CHECK(all[1].severity == Severity::error);

  CHECK(err_kind([&] { log.acknowledge("ind-99999999"); }) ==
        "UnknownIndicator");
}

TEST_CASE("indicators and their acknowledgments survive a restart") {
  auto store = memory_store("indicators");
  auto clock = std::make_shared<ManualClock>();
  {
    IndicatorLog log(store, clock);
    log.raise(Severity::info, "a", "one");
    Indicator second = log.raise(Severity::error, "b", "two");
    log.acknowledge(second.id);
  }
  IndicatorLog revived(store, clock);
  auto all = revived.all();
  REQUIRE(all.size() == 2);
  CHECK(all[0].id == "ind-00000000");
  CHECK(all[0].message == "one");
  CHECK_FALSE(all[0].acknowledged);
  CHECK(all[1].acknowledged);

  // New indicators keep numbering after the reloaded ones.
  CHECK(revived.raise(Severity::info, "c", "three").id == "ind-00000002");
}

TEST_CASE("inactivity raises one warning per quiet episode") {
  auto clock = std::make_shared<ManualClock>();
  IndicatorLog log(nullptr, clock);
  InactivityDetector detector(clock, log);

  detector.activity("flow:orders");
  clock->advance(10);
  CHECK_FALSE(detector.check("flow:orders", 10).has_value());  // exactly at it
  clock->advance(1);
  auto raised = detector.check("flow:orders", 10);
  REQUIRE(raised.has_value());
  CHECK(raised->severity == Severity::warn);
  CHECK(raised->source == "flow:orders");

  // Still quiet: the same episode does not alert twice.
  clock->advance(100);
  CHECK_FALSE(detector.check("flow:orders", 10).has_value());

  // Activity closes the episode; a new quiet stretch alerts again.
  detector.activity("flow:orders");
  clock->advance(11);
  CHECK(detector.check("flow:orders", 10).has_value());
  CHECK(log.all().size() == 2);

  CHECK(err_kind([&] { detector.check("flow:nope", 10); }) ==
        "UnknownComponent");
}

static Exchange exchange_with_history(const std::string& id, int entries) {
  Exchange ex(Message(id, to_bytes("x")), "inst-" + id);
  for (int i = 0; i < entries; i++)
    ex.record("step-" + std::to_string(i), 1, "ok");
  return ex;
}

TEST_CASE("message histories are queryable until the ring evicts them") {
  MessageMonitor monitor(3);
  monitor.record(exchange_with_history("m1", 1));
  monitor.record(exchange_with_history("m2", 2));
  monitor.record(exchange_with_history("m3", 3));

  CHECK(monitor.lookup("m1").size() == 1);
  CHECK(monitor.lookup("m3").size() == 3);

  // Re-recording an existing id replaces its history without evicting.
  monitor.record(exchange_with_history("m2", 5));
  CHECK(monitor.lookup("m2").size() == 5);
  CHECK(monitor.lookup("m1").size() == 1);

  // A fourth distinct id pushes out the oldest.
  monitor.record(exchange_with_history("m4", 1));
  CHECK(err_kind([&] { monitor.lookup("m1"); }) == "UnknownMessage");
  CHECK(monitor.lookup("m2").size() == 5);
  CHECK(monitor.lookup("m4").size() == 1);
}

TEST_CASE("bus subscribers get the backlog and then live events in order") {
  SanityBus bus(1024);
  bus.publish("deploys", "v1");
  bus.publish("deploys", "v2");

  std::vector<std::string> seen;
  bus.subscribe("deploys", [&](const std::string& e) { seen.push_back(e); });
  CHECK(seen == std::vector<std::string>{"v1", "v2"});

  bus.publish("deploys", "v3");
  CHECK(seen == std::vector<std::string>{"v1", "v2", "v3"});
  CHECK(bus.retained("deploys") == std::vector<std::string>{"v1", "v2", "v3"});
  CHECK(bus.retained("nothing").empty());
}

TEST_CASE("bus retention is bounded and drops the oldest") {
  SanityBus bus(2);
  bus.publish("t", "a");
  bus.publish("t", "b");
  bus.publish("t", "c");
  CHECK(bus.retained("t") == std::vector<std::string>{"b", "c"});

  std::vector<std::string> seen;
  bus.subscribe("t", [&](const std::string& e) { seen.push_back(e); });
  CHECK(seen == std::vector<std::string>{"b", "c"});
}

TEST_CASE("step statistics walk branches, bodies, subprocesses and handlers") {
  Step mapStep;
  mapStep.type = "map";
  Step enc;
  enc.type = "encode";
  Step multicast;
  multicast.type = "multicast";
  multicast.branches.push_back(Branch{"a", {enc}});
  multicast.branches.push_back(Branch{"b", {enc}});
  Step loop;
  loop.type = "loop";
  loop.steps.push_back(mapStep);

  Step put;
  put.type = "store-put";
  Step ind;
  ind.type = "indicator";
  SubprocessDef sub;
  sub.steps.push_back(put);
  sub.onException.push_back(ExceptionHandlerDef{"*", HandlerMode::resume, {ind}});

  Step delegateStep;
  delegateStep.type = "delegate";

  FlowDefinition flow;
  flow.name = "demo";
  flow.steps = {mapStep, multicast, loop};
  flow.subprocesses["cleanup"] = sub;
  flow.onException.push_back(
      ExceptionHandlerDef{"*", HandlerMode::resume, {delegateStep}});

  auto counts = scenario_content_statistics({flow});
  CHECK(counts["map"] == 2);  // top level + inside the loop body
  CHECK(counts["multicast"] == 1);
  CHECK(counts["encode"] == 2);  // one per branch
  CHECK(counts["loop"] == 1);
  CHECK(counts["store-put"] == 1);
  CHECK(counts["indicator"] == 1);
  CHECK(counts["delegate"] == 1);
}

TEST_CASE("the scheduler fires once per elapsed cadence slot") {
  auto clock = std::make_shared<ManualClock>();
  Scheduler scheduler(nullptr, clock);
  std::vector<Tick> firedAt;
  scheduler.register_job("digest", 10,
                         [&](Tick at) { firedAt.push_back(at); });

  clock->advance(35);
  CHECK(scheduler.poll() == 3);  // floor(35 / 10)
  CHECK(firedAt == std::vector<Tick>{10, 20, 30});
  CHECK(scheduler.poll() == 0);  // nothing new
  clock->advance(5);
  CHECK(scheduler.poll() == 1);  // the tick-40 slot
  CHECK(scheduler.fire_count("digest") == 4);
  CHECK(scheduler.fire_count("absent") == 0);

  CHECK(err_kind([&] { scheduler.register_job("bad", 0, nullptr); }) ==
        "ConfigError");
}

TEST_CASE("a restarted scheduler resumes instead of replaying the schedule") {
  auto store = memory_store("sched");
  auto clock = std::make_shared<ManualClock>();
  std::vector<Tick> firedAt;
  {
    Scheduler scheduler(store, clock);
    scheduler.register_job("digest", 10,
                           [&](Tick at) { firedAt.push_back(at); });
    clock->advance(35);
    CHECK(scheduler.poll() == 3);
  }

  clock->advance(23);  // now at 58
  Scheduler revived(store, clock);
  revived.register_job("digest", 10, [&](Tick at) { firedAt.push_back(at); });
  CHECK(revived.poll() == 2);  // only ticks 40 and 50, not a replay from zero
  CHECK(firedAt == std::vector<Tick>{10, 20, 30, 40, 50});
}

TEST_CASE("locks admit one holder and support reacquisition") {
  auto store = memory_store("locks");
  auto clock = std::make_shared<ManualClock>();
  LockManager locks(store, clock);

  CHECK(locks.acquire("batch", "worker-1", 100));
  CHECK(locks.holder_of("batch") == "worker-1");
  CHECK_FALSE(locks.acquire("batch", "worker-2", 100));
  CHECK(locks.acquire("batch", "worker-1", 100));  // reentrant refresh

  CHECK(err_kind([&] { locks.release("batch", "worker-2"); }) == "NotHolder");
  locks.release("batch", "worker-1");
  CHECK_FALSE(locks.holder_of("batch").has_value());
  CHECK(err_kind([&] { locks.release("batch", "worker-1"); }) == "NotHolder");
  CHECK(locks.acquire("batch", "worker-2", 100));

  CHECK(err_kind([&] { locks.acquire("batch", "worker-2", 0); }) ==
        "ConfigError");
}

TEST_CASE("an expired lease frees the lock for the next worker") {
  auto store = memory_store("locks");
  auto clock = std::make_shared<ManualClock>();
  LockManager locks(store, clock);

  REQUIRE(locks.acquire("batch", "worker-1", 10));
  clock->advance(9);
  CHECK_FALSE(locks.acquire("batch", "worker-2", 10));  // still live
  clock->advance(1);
  CHECK_FALSE(locks.holder_of("batch").has_value());  // lease is over
  CHECK(locks.acquire("batch", "worker-2", 10));
  CHECK(locks.holder_of("batch") == "worker-2");
}

TEST_CASE("lock state survives a manager restart") {
  auto store = memory_store("locks");
  auto clock = std::make_shared<ManualClock>();
  {
    LockManager locks(store, clock);
    REQUIRE(locks.acquire("batch", "worker-1", 100));
  }
  LockManager revived(store, clock);
  CHECK(revived.holder_of("batch") == "worker-1");
  CHECK_FALSE(revived.acquire("batch", "worker-2", 100));
}

TEST_CASE("randomized interleavings never put two workers in the lock") {
  auto store = memory_store("locks");
  auto clock = std::make_shared<ManualClock>();
  LockManager locks(store, clock);
  DeterministicRng rng(7);

  struct Worker {
    std::string name;
    bool holding = false;
    Tick leaseEnd = 0;
  };
  std::vector<Worker> workers{{"w1"}, {"w2"}, {"w3"}};

  for (int round = 0; round < 1000; round++) {
    Worker& w = workers[rng.next_below(workers.size())];
    // Leases can expire underneath a holder; reconcile before acting.
    if (w.holding && clock->now() >= w.leaseEnd) w.holding = false;

    switch (rng.next_below(3)) {
      case 0:
        if (locks.acquire("shared", w.name, 5)) {
          w.holding = true;
          w.leaseEnd = clock->now() + 5;
        }
        break;
      case 1:
        if (w.holding) {
          locks.release("shared", w.name);
          w.holding = false;
        }
        break;
      case 2:
        clock->advance(rng.next_below(4));
        break;
    }

    int liveHolders = 0;
    for (Worker& other : workers) {
      if (other.holding && clock->now() < other.leaseEnd) liveHolders++;
    }
    REQUIRE(liveHolders <= 1);
    auto holder = locks.holder_of("shared");
    for (const Worker& other : workers) {
      if (other.holding && clock->now() < other.leaseEnd)
        REQUIRE(holder == other.name);
    }
  }
}
