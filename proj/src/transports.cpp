#include "ieqmon/transports.hpp"

#include <json.hpp>

#include "ieqmon/error.hpp"

namespace ieqmon {

namespace {

Delivery from_status(int status) {
  if (status == 200 || status == 409) return Delivery::acked;
  if (status == 400 || status == 401) return Delivery::rejected;
  return Delivery::failed;
}

}  // namespace

Delivery InProcessTransport::deliver(const TelemetryRecord& record, const std::string& api_key, UnixSeconds) {
  return from_status(service_.ingest(encode_wire(record, api_key)).http_status());
}

HttpTransport::HttpTransport(const std::string& endpoint, double timeout_seconds)
    : client_(endpoint, timeout_seconds) {}

bool HttpTransport::connect(UnixSeconds) { return client_.health(); }

Delivery HttpTransport::deliver(const TelemetryRecord& record, const std::string& api_key, UnixSeconds) {
  return from_status(client_.post_telemetry(encode_wire(record, api_key)).status);
}

OfflineLogTransport::OfflineLogTransport(const std::string& path) : out_(path, std::ios::trunc) {
  if (!out_) throw ConfigError("cannot open offline log " + path);
}

Delivery OfflineLogTransport::deliver(const TelemetryRecord& record, const std::string&, UnixSeconds) {
  auto body = nlohmann::ordered_json::parse(encode_wire(record, ""));
  body.erase("api_key");
  std::lock_guard lock(mu_);
  out_ << body.dump() << '\n';
  out_.flush();
  return out_ ? Delivery::logged : Delivery::failed;
}

FaultyTransport::FaultyTransport(Transport& inner, double drop_probability, std::vector<Interval> outages,
                                 std::uint64_t seed)
    : inner_(inner), drop_probability_(drop_probability), outages_(std::move(outages)), rng_(seed) {}

bool FaultyTransport::in_outage(UnixSeconds now) const {
  const auto t = static_cast<double>(now);
  for (const Interval& iv : outages_) {
    if (iv.contains(t)) return true;
  }
  return false;
}

bool FaultyTransport::connect(UnixSeconds now) { return !in_outage(now) && inner_.connect(now); }

Delivery FaultyTransport::deliver(const TelemetryRecord& record, const std::string& api_key, UnixSeconds now) {
  if (in_outage(now)) return Delivery::failed;
  if (drop_probability_ > 0 && uniform_(rng_) < drop_probability_) {
    ++injected_drops_;
    return Delivery::failed;
  }
  return inner_.deliver(record, api_key, now);
}

bool ScriptedTransport::connect(UnixSeconds now) {
  connect_times_.push_back(now);
  if (failures_ > 0) {
    --failures_;
    return false;
  }
  return true;
}

Delivery ScriptedTransport::deliver(const TelemetryRecord& record, const std::string&, UnixSeconds) {
  if (!deliveries_succeed_) return Delivery::failed;
  delivered_.push_back(record);
  return Delivery::acked;
}

}  // namespace ieqmon
