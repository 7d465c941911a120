#include "ieqmon/simulation.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include "ieqmon/error.hpp"
#include "ieqmon/metering.hpp"
#include "ieqmon/transports.hpp"

namespace ieqmon {

namespace {

constexpr std::uint64_t kSaltDevice = 0x646576;
constexpr std::uint64_t kSaltEnergy = 0x656e72;
constexpr std::uint64_t kSaltDrift = 0x647266;
constexpr std::uint64_t kSaltTempHum = 0x746d70;
constexpr std::uint64_t kSaltCo2 = 0x636f32;
constexpr std::uint64_t kSaltNetwork = 0x6e6574;

double plain_rms(const std::vector<double>& x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

double plain_power(const std::vector<double>& v, const std::vector<double>& i) {
  double acc = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) acc += v[k] * i[k];
  return acc / static_cast<double>(v.size());
}

UnixSeconds wall_now_ceil() {
  using namespace std::chrono;
  const auto now = system_clock::now().time_since_epoch();
  return duration_cast<seconds>(now).count() + 1;
}

void sleep_until_unix(UnixSeconds t) {
  std::this_thread::sleep_until(std::chrono::system_clock::time_point(std::chrono::seconds(t)));
}

DeviceRunStats run_one(const Scenario& sc, std::size_t index, const DeviceConfig& cfg, UnixSeconds start,
                       const TransportFactory& make_transport, const RunOptions& opts) {
  const std::uint64_t seed = derive_seed(sc.seed, kSaltDevice + index);
  SimulatedSensors sensors(sc, seed, start);
  std::unique_ptr<Transport> base = make_transport(cfg);

  std::vector<Interval> outages;
  for (const Interval& o : sc.network.outages) {
    outages.push_back({static_cast<double>(start) + o.start, static_cast<double>(start) + o.end});
  }
  std::unique_ptr<FaultyTransport> faulty;
  Transport* link = base.get();
  if (!opts.offline) {
    faulty = std::make_unique<FaultyTransport>(*base, cfg.drop_probability, outages, derive_seed(seed, kSaltNetwork));
    link = faulty.get();
  }

  DeviceRuntime runtime(cfg, sensors, *link);
  const bool realtime = opts.mode == RunMode::realtime;
  const std::int64_t step = cfg.report_interval;
  std::uint64_t ticks = 0;
  UnixSeconds t = start;
  for (; t < start + sc.duration; t += step) {
    if (realtime) sleep_until_unix(t);
    runtime.tick(t);
    ++ticks;
    if (opts.on_tick) opts.on_tick(cfg.device_id, t);
  }

  if (faulty && sc.network.recover_after_run) {
    faulty->set_drop_probability(0.0);
    const UnixSeconds drain_end = t + sc.network.max_drain_seconds;
    while (t < drain_end && !runtime.state().retry_queue.empty()) {
      if (realtime) sleep_until_unix(t);
      runtime.drain(t);
      t += step;
    }
  }

  DeviceRunStats stats;
  stats.device_id = cfg.device_id;
  stats.counters = runtime.counters();
  stats.queued = runtime.state().retry_queue.size();
  stats.connect_attempts = runtime.state().connect_attempts;
  stats.ticks = ticks;
  stats.injected_drops = faulty ? faulty->injected_drops() : 0;
  stats.final_phase = runtime.state().phase;
  return stats;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void provision(AuthRegistry& auth, const Scenario& scenario) {
  for (const DeviceConfig& d : scenario.devices) auth.add_device({d.device_id, d.api_key, d.owner});
  for (const UserSpec& u : scenario.users) {
    auth.add_user(u.username, u.password_hash.empty() ? hash_password(u.password) : u.password_hash);
  }
}

SimulatedSensors::SimulatedSensors(const Scenario& scenario, std::uint64_t seed, UnixSeconds start_time)
    : scenario_(scenario),
      seed_(seed),
      start_time_(start_time),
      calibration_(CalibrationSet::from_frontend(scenario.frontend)),
      env_(scenario.ieq.initial) {}

bool SimulatedSensors::faulted(UnixSeconds tick_time) const {
  const std::int64_t offset = tick_time - start_time_;
  for (std::int64_t f : scenario_.sensor_faults) {
    if (f == offset) return true;
  }
  return false;
}

AnalogPair SimulatedSensors::truth_window(UnixSeconds tick_time) const {
  const TimeWindow window{static_cast<double>(tick_time - start_time_), 1.0};
  const WaveformSpec& spec = scenario_.waveform;
  AnalogPair pair;
  pair.start_time = tick_time;
  pair.rate = spec.synthesis_rate;
  pair.voltage_samples = synth_voltage(spec, scenario_.events, window, derive_seed(seed_, kSaltEnergy));
  pair.current_samples.assign(pair.voltage_samples.size(), 0.0);
  for (const LoadProfile& load : scenario_.loads) {
    const std::vector<double> i = synth_current(load, spec, window);
    for (std::size_t k = 0; k < i.size(); ++k) pair.current_samples[k] += i[k];
  }
  return pair;
}

std::optional<SampleWindow> SimulatedSensors::energy_window(UnixSeconds tick_time) {
  if (faulted(tick_time)) return std::nullopt;
  return digitize(truth_window(tick_time), scenario_.frontend, derive_seed(seed_, kSaltEnergy));
}

std::optional<IeqReading> SimulatedSensors::ieq_reading(UnixSeconds tick_time) {
  if (faulted(tick_time)) return std::nullopt;
  if (env_time_ && tick_time > *env_time_) {
    const auto dt = static_cast<double>(tick_time - *env_time_);
    env_ = step_environment(env_, dt, scenario_.ieq.drift,
                            derive_seed(derive_seed(seed_, kSaltDrift), static_cast<std::uint64_t>(tick_time)));
  }
  env_time_ = tick_time;
  const auto t = static_cast<std::uint64_t>(tick_time);
  const TempHumidity th = read_temp_humidity(env_, scenario_.ieq.sensor, derive_seed(derive_seed(seed_, kSaltTempHum), t));
  IeqReading r;
  r.timestamp = tick_time;
  r.temperature = th.temperature;
  r.humidity = th.humidity;
  r.co2 = read_co2(env_, scenario_.ieq.sensor, derive_seed(derive_seed(seed_, kSaltCo2), t));
  return r;
}

std::string_view to_string(RunMode m) { return m == RunMode::fast ? "fast" : "realtime"; }

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["scenario"] = scenario;
  j["seed"] = seed;
  j["mode"] = std::string(to_string(mode));
  j["duration"] = duration;
  j["offline"] = offline;
  if (mode == RunMode::fast) j["start_time"] = start_time;
  DeviceCounters total;
  std::size_t queued = 0;
  auto& devs = j["devices"] = nlohmann::ordered_json::array();
  for (const DeviceRunStats& d : devices) {
    nlohmann::ordered_json e;
    e["device_id"] = d.device_id;
    e["produced"] = d.counters.produced;
    e["acked"] = d.counters.acked;
    e["dropped"] = d.counters.dropped;
    e["rejected"] = d.counters.rejected;
    e["queued"] = d.queued;
    e["logged"] = d.counters.logged;
    e["skipped"] = d.counters.skipped;
    e["ticks"] = d.ticks;
    e["connect_attempts"] = d.connect_attempts;
    e["injected_drops"] = d.injected_drops;
    e["final_phase"] = std::string(to_string(d.final_phase));
    devs.push_back(std::move(e));
    total.produced += d.counters.produced;
    total.acked += d.counters.acked;
    total.dropped += d.counters.dropped;
    total.logged += d.counters.logged;
    total.skipped += d.counters.skipped;
    queued += d.queued;
  }
  j["totals"] = {{"produced", total.produced}, {"acked", total.acked},   {"dropped", total.dropped},
                 {"queued", queued},           {"logged", total.logged}, {"skipped", total.skipped}};
  return j;
}

RunManifest run_devices(const Scenario& scenario, const TransportFactory& make_transport, const RunOptions& options) {
  RunManifest m;
  m.scenario = scenario.name;
  m.seed = scenario.seed;
  m.mode = options.mode;
  m.duration = scenario.duration;
  m.offline = options.offline;
  m.start_time = options.mode == RunMode::fast ? scenario.start_time : wall_now_ceil();
  m.devices.resize(scenario.devices.size());

  if (scenario.devices.size() == 1) {
    m.devices[0] = run_one(scenario, 0, scenario.devices[0], m.start_time, make_transport, options);
    return m;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(scenario.devices.size());
  for (std::size_t k = 0; k < scenario.devices.size(); ++k) {
    threads.emplace_back([&, k] {
      try {
        m.devices[k] = run_one(scenario, k, scenario.devices[k], m.start_time, make_transport, options);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return m;
}

bool ValidationReport::passed() const {
  for (const ValidationRow& r : rows) {
    if (!r.pass) return false;
  }
  return true;
}

std::string ValidationReport::table() const {
  std::string out = fmt::format("Accuracy report: {} (tolerance {:.2f}%{})\n", scenario, tolerance,
                                ideal ? ", ideal chain" : "");
  out += fmt::format("{:<16} {:<12} {:>14} {:>14} {:>9}  {}\n", "Item", "Quantity", "Reference", "Measured",
                     "Error(%)", "Result");
  for (const ValidationRow& r : rows) {
    const std::string unit = r.unit.empty() ? "" : " " + r.unit;
    out += fmt::format("{:<16} {:<12} {:>14} {:>14} {:>9.2f}  {}\n", r.item, r.quantity,
                       fmt::format("{:.2f}{}", r.reference, unit), fmt::format("{:.2f}{}", r.measured, unit),
                       r.percent_error, r.pass ? "PASS" : "FAIL");
  }
  out += passed() ? "All errors within tolerance.\n" : "Some errors exceed the tolerance.\n";
  return out;
}

std::string ValidationReport::csv() const {
  std::string out = "item,quantity,unit,reference,measured,percent_error,pass\n";
  for (const ValidationRow& r : rows) {
    out += fmt::format("{},{},{},{:.6f},{:.6f},{:.2f},{}\n", r.item, r.quantity, r.unit, r.reference, r.measured,
                       r.percent_error, r.pass ? "true" : "false");
  }
  return out;
}

Scenario idealized(Scenario sc) {
  sc.waveform.noise_sigma = 0.0;
  sc.frontend.current_noise_sigma = 0.0;
  sc.frontend.adc.resolution_bits = AdcModel::kMaxBits;
  IeqSensorModel& m = sc.ieq.sensor;
  m.temp_noise_sigma = 0.0;
  m.humid_noise_sigma = 0.0;
  m.co2_noise_sigma = 0.0;
  m.co2_curve.offset_ppm = 0.0;
  m.temp_resolution = 1e-9;
  m.humid_resolution = 1e-9;
  m.adc.resolution_bits = AdcModel::kMaxBits;
  sc.ieq.drift = DriftParams::frozen(sc.ieq.initial);
  return sc;
}

ValidationReport run_validation(const Scenario& input, bool ideal) {
  if (!input.validation) throw ConfigError("scenario has no validation section (reference values are required)");
  const Scenario sc = ideal ? idealized(input) : input;
  const ValidationSpec& spec = *sc.validation;
  const bool explicit_refs = spec.source == ValidationSpec::Source::explicit_values;

  ValidationReport report;
  report.scenario = sc.name;
  report.tolerance = spec.tolerance;
  report.ideal = ideal;

  auto add = [&](const std::string& item, const char* quantity, const char* unit, double ref, double measured) {
    if (ref == 0.0) throw ConfigError("validation: reference for " + item + " " + quantity + " is zero");
    ValidationRow row{item, quantity, unit, ref, measured, round_half_up(percent_error(measured, ref), 2), false};
    row.pass = row.percent_error <= spec.tolerance;
    report.rows.push_back(std::move(row));
  };

  const double windows = spec.windows;
  if (spec.energy) {
    for (std::size_t k = 0; k < sc.loads.size(); ++k) {
      const LoadProfile& load = sc.loads[k];
      ApplianceReference given{};
      if (explicit_refs) {
        const auto it = spec.appliances.find(load.appliance_name);
        if (it == spec.appliances.end()) {
          throw ConfigError("validation.appliances: missing reference for '" + load.appliance_name + "'");
        }
        given = it->second;
      }
      Scenario single = sc;
      single.loads = {load};
      SimulatedSensors sensors(single, derive_seed(sc.seed, kSaltDevice + k), sc.start_time);
      ApplianceReference truth{};
      ApplianceReference measured{};
      for (int w = 0; w < spec.windows; ++w) {
        const UnixSeconds t = sc.start_time + w;
        const AnalogPair pair = sensors.truth_window(t);
        truth.power += plain_power(pair.voltage_samples, pair.current_samples) / windows;
        truth.voltage += plain_rms(pair.voltage_samples) / windows;
        truth.current += plain_rms(pair.current_samples) / windows;
        const SampleWindow win = *sensors.energy_window(t);
        const MeterReading r = compute_reading(win, single.frontend.adc, single.frontend.bias, sensors.calibration(), t);
        measured.power += r.active_power / windows;
        measured.voltage += r.v_rms / windows;
        measured.current += r.i_rms / windows;
      }
      const ApplianceReference& ref = explicit_refs ? given : truth;
      add(load.appliance_name, "power", "W", ref.power, measured.power);
      add(load.appliance_name, "voltage", "V", ref.voltage, measured.voltage);
      add(load.appliance_name, "current", "A", ref.current, measured.current);
    }
  }

  if (spec.ieq) {
    if (explicit_refs && !spec.ieq_reference) throw ConfigError("validation.ieq_reference: missing reference values");
    SimulatedSensors sensors(sc, derive_seed(sc.seed, kSaltDevice), sc.start_time);
    IeqReference truth{};
    IeqReference measured{};
    for (int w = 0; w < spec.windows; ++w) {
      const IeqReading r = *sensors.ieq_reading(sc.start_time + w);
      truth.temperature += sensors.environment().temperature / windows;
      truth.humidity += sensors.environment().humidity / windows;
      truth.co2 += sensors.environment().co2 / windows;
      measured.temperature += r.temperature / windows;
      measured.humidity += r.humidity / windows;
      measured.co2 += static_cast<double>(r.co2) / windows;
    }
    const IeqReference& ref = explicit_refs ? *spec.ieq_reference : truth;
    add("room", "temperature", "degC", ref.temperature, measured.temperature);
    add("room", "humidity", "%RH", ref.humidity, measured.humidity);
    add("room", "co2", "ppm", ref.co2, measured.co2);
  }

  if (report.rows.empty()) throw ConfigError("validation: nothing to validate (no loads and ieq disabled)");
  return report;
}

}  // namespace ieqmon
