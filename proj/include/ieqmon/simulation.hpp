#pragma once

// Scenario execution: simulated sensors, device runs against any transport,
// the run manifest, and the accuracy validation report.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "ieqmon/auth.hpp"
#include "ieqmon/device.hpp"
#include "ieqmon/scenario.hpp"

namespace ieqmon {

/// splitmix64 over (seed, salt); used to give every stream its own seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt);

/// Registers the scenario's devices and users.
void provision(AuthRegistry& auth, const Scenario& scenario);

/// Ground-truth generator for one device. Each tick samples a 1 s window.
class SimulatedSensors : public DeviceSensors {
 public:
  SimulatedSensors(const Scenario& scenario, std::uint64_t seed, UnixSeconds start_time);

  std::optional<SampleWindow> energy_window(UnixSeconds tick_time) override;
  std::optional<IeqReading> ieq_reading(UnixSeconds tick_time) override;
  const FrontEndConfig& frontend() const override { return scenario_.frontend; }
  const CalibrationSet& calibration() const override { return calibration_; }

  /// The analog signals the ADC sees for the window starting at `tick_time`.
  AnalogPair truth_window(UnixSeconds tick_time) const;
  const IeqState& environment() const { return env_; }

 private:
  bool faulted(UnixSeconds tick_time) const;

  const Scenario& scenario_;
  std::uint64_t seed_;
  UnixSeconds start_time_;
  CalibrationSet calibration_;
  IeqState env_;
  std::optional<UnixSeconds> env_time_;
};

enum class RunMode { fast, realtime };

std::string_view to_string(RunMode m);

struct DeviceRunStats {
  std::string device_id;
  DeviceCounters counters;
  std::size_t queued = 0;  // still in the retry queue at the end
  std::uint64_t connect_attempts = 0;
  std::uint64_t ticks = 0;
  std::uint64_t injected_drops = 0;
  Phase final_phase = Phase::init;
};

struct RunManifest {
  std::string scenario;
  std::uint64_t seed = 0;
  RunMode mode = RunMode::fast;
  std::int64_t duration = 0;
  UnixSeconds start_time = 0;
  bool offline = false;
  std::vector<DeviceRunStats> devices;

  /// Deterministic for a given scenario, seed and transport behavior (no wall-clock fields).
  nlohmann::ordered_json to_json() const;
};

using TransportFactory = std::function<std::unique_ptr<Transport>(const DeviceConfig&)>;

struct RunOptions {
  RunMode mode = RunMode::fast;
  bool offline = false;
  /// Called once per device tick in simulated time; lets callers interleave work.
  std::function<void(const std::string& device_id, UnixSeconds now)> on_tick;
};

/// Runs every device for the scenario duration (one thread per device when
/// there are several), then drains retry queues if the network recovers.
RunManifest run_devices(const Scenario& scenario, const TransportFactory& make_transport, const RunOptions& options);

struct ValidationRow {
  std::string item;      // appliance name or IEQ quantity
  std::string quantity;  // power, voltage, current, temperature, humidity, co2
  std::string unit;
  double reference = 0.0;
  double measured = 0.0;
  double percent_error = 0.0;  // rounded to 2 dp
  bool pass = false;
};

struct ValidationReport {
  std::string scenario;
  double tolerance = 1.0;
  bool ideal = false;
  std::vector<ValidationRow> rows;

  bool passed() const;
  std::string table() const;
  std::string csv() const;
};

/// Replaces every noise source and quantizer with an (effectively) perfect one.
Scenario idealized(Scenario scenario);

/// Throws ConfigError if the scenario has no validation section or lacks a reference value.
ValidationReport run_validation(const Scenario& scenario, bool ideal = false);

}  // namespace ieqmon
