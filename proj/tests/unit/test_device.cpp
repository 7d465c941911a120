#include <doctest.h>

#include <fstream>
#include <limits>
#include <random>

#include "fixtures.hpp"
#include "ieqmon/device.hpp"
#include "ieqmon/error.hpp"
#include "ieqmon/simulation.hpp"
#include "ieqmon/transports.hpp"

using namespace ieqmon;

namespace {

constexpr UnixSeconds kT0 = 1704067200;

Scenario steady() {
  Scenario sc;
  sc.waveform.nominal_rms_voltage = 222.0;
  sc.waveform.noise_sigma = 0.3;
  sc.loads = {LoadProfile::always_on("kettle", 7.40)};
  sc.ieq.initial = {24.4, 55.6, 566};
  sc.ieq.drift = DriftParams::frozen(sc.ieq.initial);
  sc.start_time = kT0;
  return sc;
}

DeviceConfig config(std::size_t capacity = 300) {
  DeviceConfig c;
  c.device_id = "node-1";
  c.api_key = "key-1";
  c.owner = "demo";
  c.retry_queue_capacity = capacity;
  return c;
}

// Transport that fails every delivery while `down` is set.
class SwitchTransport : public Transport {
 public:
  bool down = false;
  std::vector<TelemetryRecord> delivered;
  bool connect(UnixSeconds) override { return !down; }
  Delivery deliver(const TelemetryRecord& r, const std::string&, UnixSeconds) override {
    if (down) return Delivery::failed;
    delivered.push_back(r);
    return Delivery::acked;
  }
};

void check_conservation(const DeviceRuntime& rt) {
  const auto& c = rt.counters();
  CHECK(c.acked + c.dropped + c.logged + rt.state().retry_queue.size() == c.produced);
  CHECK(rt.state().retry_queue.size() <= rt.config().retry_queue_capacity);
}

}  // namespace

TEST_CASE("initialize gives a fresh INIT state") {
  const RuntimeState s = DeviceRuntime::initialize(config());
  CHECK(s.phase == Phase::init);
  CHECK(s.retry_queue.empty());
  CHECK(s.tick_count == 0);
  CHECK(s.capacity == 300);
  CHECK(to_string(Phase::retrying) == "RETRYING");
}

TEST_CASE("invalid configs name the field") {
  DeviceConfig c = config();
  c.report_interval = 0;
  CHECK_THROWS_WITH_AS(DeviceRuntime::initialize(c), doctest::Contains("report_interval"), ConfigError);
  c = config();
  c.api_key.clear();
  CHECK_THROWS_WITH_AS(DeviceRuntime::initialize(c), doctest::Contains("api_key"), ConfigError);
  c = config();
  c.device_id = "bad/id";
  CHECK_THROWS_WITH_AS(DeviceRuntime::initialize(c), doctest::Contains("device_id"), ConfigError);
  c = config();
  c.drop_probability = 1.5;
  CHECK_THROWS_WITH_AS(DeviceRuntime::initialize(c), doctest::Contains("drop_probability"), ConfigError);
  CHECK_NOTHROW(DeviceRuntime::initialize(config(0)));
}

TEST_CASE("connect succeeds on the first attempt when the link is up") {
  const Scenario sc = steady();
  SimulatedSensors sensors(sc, 1, kT0);
  ScriptedTransport link(0);
  DeviceRuntime rt(config(), sensors, link);
  CHECK(rt.state().phase == Phase::connecting);
  rt.connect(kT0);
  CHECK(rt.state().phase == Phase::running);
  CHECK(rt.state().connect_attempts == 1);
}

TEST_CASE("reconnect honors the backoff schedule") {
  const Scenario sc = steady();
  SimulatedSensors sensors(sc, 1, kT0);
  ScriptedTransport link(3);
  DeviceRuntime rt(config(), sensors, link);
  for (UnixSeconds t = kT0; t < kT0 + 30; ++t) rt.tick(t);
  CHECK(rt.state().phase == Phase::running);
  CHECK(rt.state().connect_attempts == 4);
  CHECK(link.connect_times() == std::vector<UnixSeconds>{kT0, kT0 + 5, kT0 + 10, kT0 + 15});
  CHECK(rt.counters().produced == 15);
}

TEST_CASE("permanently down link never reaches RUNNING") {
  const Scenario sc = steady();
  SimulatedSensors sensors(sc, 1, kT0);
  ScriptedTransport link(std::numeric_limits<std::uint64_t>::max());
  DeviceRuntime rt(config(), sensors, link);
  std::uint64_t last = 0;
  for (UnixSeconds t = kT0; t < kT0 + 100; t += 5) {
    rt.tick(t);
    CHECK(rt.state().phase == Phase::connecting);
    CHECK(rt.state().connect_attempts > last);
    last = rt.state().connect_attempts;
  }
}

TEST_CASE("steady kettle record") {
  const Scenario sc = steady();
  SimulatedSensors sensors(sc, 1, kT0);
  ScriptedTransport link(0);
  DeviceRuntime rt(config(), sensors, link);
  rt.connect(kT0);
  const auto r = rt.acquire_cycle(kT0);
  REQUIRE(r.has_value());
  CHECK(r->device_id == "node-1");
  CHECK(r->ts == kT0);
  CHECK(r->v_rms == doctest::Approx(222.0).epsilon(0.01));
  CHECK(r->i_rms == doctest::Approx(7.40).epsilon(0.01));
  CHECK(r->temperature >= 24.2);
  CHECK(r->temperature <= 24.6);
  CHECK_FALSE(r->suspect);
}

TEST_CASE("zeroed sensors give a record of zeros") {
  Scenario sc = steady();
  sc.waveform.nominal_rms_voltage = 0.0;
  sc.waveform.noise_sigma = 0.0;
  sc.frontend.current_noise_sigma = 0.0;
  sc.loads.clear();
  sc.ieq.initial = {0.0, 0.0, 0.0};
  sc.ieq.drift = DriftParams::frozen(sc.ieq.initial);
  SimulatedSensors sensors(sc, 1, kT0);
  ScriptedTransport link(0);
  DeviceRuntime rt(config(), sensors, link);
  rt.connect(kT0);
  const auto r = rt.acquire_cycle(kT0);
  REQUIRE(r.has_value());
  CHECK(r->v_rms == 0.0);
  CHECK(r->i_rms == 0.0);
  CHECK(r->active_power == 0.0);
  CHECK(r->temperature == 0.0);
  CHECK(r->humidity == 0.0);
  CHECK(r->co2 == 0.0);
}

TEST_CASE("acquire_cycle contract") {
  const Scenario sc = steady();
  SimulatedSensors sensors(sc, 1, kT0);
  ScriptedTransport link(0);
  DeviceRuntime rt(config(), sensors, link);
  CHECK_THROWS_AS(rt.acquire_cycle(kT0), ContractViolation);
  rt.connect(kT0);
  CHECK(rt.acquire_cycle(kT0 + 1).has_value());
  CHECK_THROWS_AS(rt.acquire_cycle(kT0 + 1), ContractViolation);
  CHECK_THROWS_AS(rt.acquire_cycle(kT0), ContractViolation);
}

TEST_CASE("300 ticks give 300 consecutive records") {
  const Scenario sc = steady();
  SimulatedSensors sensors(sc, 1, kT0);
  ScriptedTransport link(0);
  DeviceRuntime rt(config(), sensors, link);
  for (int k = 0; k < 300; ++k) rt.tick(kT0 + k);
  REQUIRE(link.delivered().size() == 300);
  for (int k = 0; k < 300; ++k) CHECK(link.delivered()[k].ts == kT0 + k);
  CHECK(rt.counters().acked == 300);
  CHECK(rt.state().tick_count == 300);
  check_conservation(rt);
}

TEST_CASE("sensor faults skip the tick without inventing data") {
  Scenario sc = steady();
  sc.sensor_faults = {3, 4, 10};
  SimulatedSensors sensors(sc, 1, kT0);
  ScriptedTransport link(0);
  DeviceRuntime rt(config(), sensors, link);
  for (int k = 0; k < 20; ++k) rt.tick(kT0 + k);
  CHECK(rt.counters().skipped == 3);
  CHECK(rt.counters().produced == 17);
  for (const auto& r : link.delivered()) {
    CHECK(r.ts != kT0 + 3);
    CHECK(r.ts != kT0 + 10);
  }
}

TEST_CASE("total loss with capacity 10 keeps the newest ten") {
  const Scenario sc = steady();
  SimulatedSensors sensors(sc, 1, kT0);
  ScriptedTransport inner(0);
  FaultyTransport link(inner, 1.0, {}, 5);
  DeviceRuntime rt(config(10), sensors, link);
  for (int k = 0; k < 25; ++k) rt.tick(kT0 + k);
  CHECK(rt.counters().produced == 25);
  CHECK(rt.counters().dropped == 15);
  REQUIRE(rt.state().retry_queue.size() == 10);
  CHECK(rt.state().retry_queue.front().ts == kT0 + 15);
  CHECK(rt.state().retry_queue.back().ts == kT0 + 24);
  check_conservation(rt);
}

TEST_CASE("capacity 0 drops failed posts immediately") {
  const Scenario sc = steady();
  SimulatedSensors sensors(sc, 1, kT0);
  SwitchTransport link;
  DeviceRuntime rt(config(0), sensors, link);
  rt.connect(kT0);
  link.down = true;
  const auto r = rt.acquire_cycle(kT0);
  CHECK(rt.post_record(*r, kT0) == PostOutcome::dropped);
  CHECK(rt.counters().dropped == 1);
  CHECK(rt.state().retry_queue.empty());
}

TEST_CASE("queued records flush oldest first before new ones") {
  const Scenario sc = steady();
  SimulatedSensors sensors(sc, 1, kT0);
  SwitchTransport link;
  DeviceRuntime rt(config(), sensors, link);
  rt.tick(kT0);
  link.down = true;
  for (int k = 1; k < 12; ++k) rt.tick(kT0 + k);
  CHECK(rt.state().phase == Phase::retrying);
  link.down = false;
  for (int k = 12; k < 30; ++k) rt.tick(kT0 + k);
  CHECK(rt.state().phase == Phase::running);
  REQUIRE(link.delivered.size() == 30);
  for (int k = 0; k < 30; ++k) CHECK(link.delivered[k].ts == kT0 + k);
  check_conservation(rt);
}

TEST_CASE("30 s outage then recovery: the service holds every record in order") {
  testing::ServiceFixture f;
  Scenario sc = steady();
  SimulatedSensors sensors(sc, 1, kT0);
  InProcessTransport direct(*f.service);
  FaultyTransport link(direct, 0.0, {{double(kT0 + 50), double(kT0 + 80)}}, 9);
  DeviceRuntime rt(config(60), sensors, link);
  for (int k = 0; k < 200; ++k) rt.tick(kT0 + k);
  for (int k = 200; k < 260 && !rt.state().retry_queue.empty(); ++k) rt.drain(kT0 + k);
  const auto stored = f.service->store().records("node-1", 0, kT0 * 2);
  REQUIRE(stored.size() == 200);
  for (int k = 0; k < 200; ++k) CHECK(stored[k].ts == kT0 + k);
  const auto seq = f.service->store().stored("node-1", 0, kT0 * 2);
  for (std::size_t k = 1; k < seq.size(); ++k) CHECK(seq[k - 1].ingest_sequence < seq[k].ingest_sequence);
  CHECK(rt.counters().dropped == 0);
}

TEST_CASE("property: queue bound and record conservation under random loss") {
  std::mt19937_64 rng(17);
  const Scenario sc = steady();
  for (int trial = 0; trial < 20; ++trial) {
    SimulatedSensors sensors(sc, trial, kT0);
    ScriptedTransport inner(rng() % 3);
    const double p = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    FaultyTransport link(inner, p, {}, rng());
    DeviceRuntime rt(config(rng() % 40), sensors, link);
    for (int k = 0; k < 150; ++k) {
      rt.tick(kT0 + k);
      REQUIRE(rt.state().retry_queue.size() <= rt.config().retry_queue_capacity);
    }
    check_conservation(rt);
    CHECK(rt.state().tick_count == 150);
    for (std::size_t k = 1; k < inner.delivered().size(); ++k) {
      CHECK(inner.delivered()[k - 1].ts < inner.delivered()[k].ts);
    }
  }
}

TEST_CASE("rejected records are counted and dropped") {
  testing::ServiceFixture f;
  const Scenario sc = steady();
  SimulatedSensors sensors(sc, 1, kT0);
  InProcessTransport direct(*f.service);
  DeviceConfig c = config();
  c.api_key = "wrong";
  DeviceRuntime rt(c, sensors, direct);
  for (int k = 0; k < 5; ++k) rt.tick(kT0 + k);
  CHECK(rt.counters().rejected == 5);
  CHECK(rt.counters().dropped == 5);
  CHECK(f.service->store().size() == 0);
}

TEST_CASE("offline transport logs without the api key") {
  testing::TempDir dir("offline");
  const auto path = (dir / "log.jsonl").string();
  const Scenario sc = steady();
  SimulatedSensors sensors(sc, 1, kT0);
  {
    OfflineLogTransport link(path);
    DeviceRuntime rt(config(), sensors, link);
    for (int k = 0; k < 10; ++k) rt.tick(kT0 + k);
    CHECK(rt.counters().logged == 10);
    CHECK(rt.counters().acked == 0);
  }
  std::ifstream in(path);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    CHECK(line.find("api_key") == std::string::npos);
    CHECK(line.find("\"device_id\":\"node-1\"") != std::string::npos);
  }
  CHECK(n == 10);
}
