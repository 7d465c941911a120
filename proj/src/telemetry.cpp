#include "ieqmon/telemetry.hpp"

#include <cmath>
#include <json.hpp>

#include "ieqmon/metering.hpp"

namespace ieqmon {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::vrms: return "vrms";
    case Metric::irms: return "irms";
    case Metric::power: return "power";
    case Metric::temp: return "temp";
    case Metric::humidity: return "humidity";
    case Metric::co2: return "co2";
  }
  return "?";
}

std::optional<Metric> parse_metric(std::string_view name) {
  for (Metric m : kAllMetrics) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

double metric_value(const TelemetryRecord& r, Metric m) {
  switch (m) {
    case Metric::vrms: return r.v_rms;
    case Metric::irms: return r.i_rms;
    case Metric::power: return r.active_power;
    case Metric::temp: return r.temperature;
    case Metric::humidity: return r.humidity;
    case Metric::co2: return r.co2;
  }
  return 0.0;
}

TelemetryRecord wire_rounded(const TelemetryRecord& r) {
  TelemetryRecord out = r;
  out.v_rms = round_half_up(r.v_rms, 3);
  out.i_rms = round_half_up(r.i_rms, 3);
  out.active_power = round_half_up(r.active_power, 2);
  out.temperature = round_half_up(r.temperature, 3);
  out.humidity = round_half_up(r.humidity, 3);
  out.co2 = std::floor(r.co2 + 0.5);
  return out;
}

std::string encode_wire(const TelemetryRecord& r, const std::string& api_key) {
  const TelemetryRecord w = wire_rounded(r);
  ordered_json body;
  body["device_id"] = w.device_id;
  body["api_key"] = api_key;
  body["ts"] = w.ts;
  body["vrms"] = w.v_rms;
  body["irms"] = w.i_rms;
  body["power"] = w.active_power;
  body["temp"] = w.temperature;
  body["humidity"] = w.humidity;
  body["co2"] = static_cast<std::int64_t>(w.co2);
  body["suspect"] = w.suspect;
  return body.dump();
}

namespace {

const json& field(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end()) throw WireError(key, std::string("missing field '") + key + "'");
  return *it;
}

std::string string_field(const json& body, const char* key) {
  const json& v = field(body, key);
  if (!v.is_string() || v.get_ref<const std::string&>().empty()) {
    throw WireError(key, std::string("field '") + key + "' must be a non-empty string");
  }
  return v.get<std::string>();
}

double number_field(const json& body, const char* key) {
  const json& v = field(body, key);
  if (!v.is_number()) throw WireError(key, std::string("field '") + key + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw WireError(key, std::string("field '") + key + "' must be finite");
  return x;
}

}  // namespace

bool valid_device_id(std::string_view id) {
  if (id.empty() || id.size() > 64 || id.front() == '.') return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-' || c == '.';
    if (!ok) return false;
  }
  return true;
}

WireTelemetry decode_wire(std::string_view body_text) {
  json body = json::parse(body_text, nullptr, /*allow_exceptions=*/false);
  if (body.is_discarded() || !body.is_object()) throw WireError("body", "body is not a JSON object");

  WireTelemetry out;
  TelemetryRecord& r = out.record;
  r.device_id = string_field(body, "device_id");
  if (!valid_device_id(r.device_id)) {
    throw WireError("device_id", "field 'device_id' must match [A-Za-z0-9_.-]{1,64} and not start with '.'");
  }
  out.api_key = string_field(body, "api_key");
  const json& ts = field(body, "ts");
  if (!ts.is_number_integer()) throw WireError("ts", "field 'ts' must be integer unix seconds");
  if (ts.is_number_unsigned() && ts.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
    throw WireError("ts", "field 'ts' out of range");
  }
  r.ts = ts.get<std::int64_t>();
  r.v_rms = number_field(body, "vrms");
  r.i_rms = number_field(body, "irms");
  r.active_power = number_field(body, "power");
  r.temperature = number_field(body, "temp");
  r.humidity = number_field(body, "humidity");
  r.co2 = number_field(body, "co2");
  const json& suspect = field(body, "suspect");
  if (!suspect.is_boolean()) throw WireError("suspect", "field 'suspect' must be a boolean");
  r.suspect = suspect.get<bool>();
  if (r.v_rms < 0) throw WireError("vrms", "field 'vrms' must be >= 0");
  if (r.i_rms < 0) throw WireError("irms", "field 'irms' must be >= 0");
  if (r.co2 < 0) throw WireError("co2", "field 'co2' must be >= 0");
  return out;
}

}  // namespace ieqmon
