#pragma once

// Declarative scenario documents (YAML). See docs/scenario-format.md.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ieqmon/device.hpp"
#include "ieqmon/frontend.hpp"
#include "ieqmon/ieq.hpp"
#include "ieqmon/insight.hpp"
#include "ieqmon/waveform.hpp"

namespace ieqmon {

struct IeqScenario {
  IeqState initial{};
  DriftParams drift = DriftParams::frozen(IeqState{});
  IeqSensorModel sensor{};
};

struct NetworkScenario {
  double drop_probability = 0.0;
  std::vector<Interval> outages;   // s from scenario start
  bool recover_after_run = true;   // stop injecting loss and drain the queue after the run
  std::int64_t max_drain_seconds = 600;
};

struct UserSpec {
  std::string username;
  std::string password;       // hashed at load time, never stored
  std::string password_hash;  // alternative to `password`
};

struct ApplianceReference {
  double power = 0.0;
  double voltage = 0.0;
  double current = 0.0;
};

struct IeqReference {
  double temperature = 0.0;
  double humidity = 0.0;
  double co2 = 0.0;
};

struct ValidationSpec {
  enum class Source { ground_truth, explicit_values };
  Source source = Source::ground_truth;
  double tolerance = 1.0;  // percent
  int windows = 1;
  bool energy = true;
  bool ieq = true;
  std::map<std::string, ApplianceReference> appliances;  // explicit_values only
  std::optional<IeqReference> ieq_reference;              // explicit_values only
};

struct Scenario {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  std::int64_t duration = 300;  // s
  UnixSeconds start_time = 1704067200;  // 2024-01-01T00:00:00Z
  WaveformSpec waveform{};
  FrontEndConfig frontend = FrontEndConfig::defaults();
  std::vector<LoadProfile> loads;
  std::vector<GridEvent> events;
  IeqScenario ieq{};
  std::vector<DeviceConfig> devices;
  std::vector<UserSpec> users;
  RuleSet rules{};
  NetworkScenario network{};
  std::vector<std::int64_t> sensor_faults;  // tick offsets (s) where the sensors fail
  std::optional<ValidationSpec> validation;

  /// Cross-field checks (devices, events, loads, ...). Throws ConfigError.
  void validate() const;
};

/// Throws ConfigError with the offending key path on unknown keys or bad values.
Scenario parse_scenario(std::string_view yaml_text);
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace ieqmon
