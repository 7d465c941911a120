#pragma once

// The telemetry record and its JSON wire encoding.

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "ieqmon/time.hpp"

namespace ieqmon {

struct TelemetryRecord {
  std::string device_id;
  UnixSeconds ts = 0;
  double v_rms = 0.0;
  double i_rms = 0.0;
  double active_power = 0.0;
  double temperature = 0.0;
  double humidity = 0.0;
  double co2 = 0.0;
  bool suspect = false;

  bool operator==(const TelemetryRecord&) const = default;
};

enum class Metric { vrms, irms, power, temp, humidity, co2 };

inline constexpr std::array<Metric, 6> kAllMetrics{Metric::vrms, Metric::irms, Metric::power,
                                                   Metric::temp, Metric::humidity, Metric::co2};

std::string_view to_string(Metric m);
std::optional<Metric> parse_metric(std::string_view name);
double metric_value(const TelemetryRecord& r, Metric m);

/// Rounds to the wire precision: 3 decimals for V/A/degC/%RH, 2 for W, integer co2.
TelemetryRecord wire_rounded(const TelemetryRecord& r);

/// POST body for /api/v1/telemetry, keys in wire order.
std::string encode_wire(const TelemetryRecord& r, const std::string& api_key);

/// Body rejected by the decoder; `field` is the first offending key ("body" when unparseable).
class WireError : public std::runtime_error {
 public:
  WireError(std::string field, const std::string& what)
      : std::runtime_error(what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct WireTelemetry {
  TelemetryRecord record;
  std::string api_key;
};

/// Identifiers double as log file names, so they are restricted to a safe charset.
bool valid_device_id(std::string_view id);

/// Strict decoder for hostile input. Throws WireError.
WireTelemetry decode_wire(std::string_view body);

}  // namespace ieqmon
