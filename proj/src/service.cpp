#include "ieqmon/service.hpp"

#include "ieqmon/telemetry.hpp"

namespace ieqmon {

int IngestResult::http_status() const {
  switch (status) {
    case IngestStatus::stored: return 200;
    case IngestStatus::duplicate: return 409;
    case IngestStatus::invalid: return 400;
    case IngestStatus::unauthorized: return 401;
  }
  return 500;
}

TelemetryService::TelemetryService(ServiceOptions options, AuthRegistry& auth)
    : auth_(auth),
      store_(options.data_dir, options.sync_writes),
      outbox_(options.data_dir / "outbox.jsonl"),
      engine_(std::move(options.rules), outbox_, store_) {}

std::mutex& TelemetryService::pipeline(const std::string& device_id) {
  std::lock_guard lock(pipelines_mu_);
  auto& slot = pipelines_[device_id];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

IngestResult TelemetryService::ingest(std::string_view body) {
  WireTelemetry wire;
  try {
    wire = decode_wire(body);
  } catch (const WireError& e) {
    return {IngestStatus::invalid, e.field(), 0};
  }
  if (!auth_.check_api_key(wire.record.device_id, wire.api_key)) {
    return {IngestStatus::unauthorized, "invalid api key", 0};
  }
  const std::string owner = auth_.owner_of(wire.record.device_id).value_or("");

  std::lock_guard lock(pipeline(wire.record.device_id));
  const AppendResult appended = store_.append(wire.record);
  if (appended.status == AppendStatus::duplicate) return {IngestStatus::duplicate, "duplicate", 0};
  engine_.on_record(wire.record, owner);
  return {IngestStatus::stored, "stored", appended.ingest_sequence};
}

SessionToken TelemetryService::authenticate(const std::string& username, const std::string& password) {
  return auth_.authenticate(username, password);
}

std::vector<SeriesPoint> TelemetryService::query_series(const std::string& token, const std::string& device_id,
                                                        std::string_view metric, UnixSeconds from,
                                                        UnixSeconds to) const {
  auth_.require_owner(token, device_id);
  const auto m = parse_metric(metric);
  if (!m) throw ValidationError("metric", "unknown metric '" + std::string(metric) + "'");
  if (from > to) throw ValidationError("from", "from must be <= to");
  return store_.query(device_id, *m, from, to);
}

std::vector<Notification> TelemetryService::list_notifications(const std::string& token,
                                                               const std::string& device_id, UnixSeconds from,
                                                               UnixSeconds to) const {
  auth_.require_owner(token, device_id);
  if (from > to) throw ValidationError("from", "from must be <= to");
  return outbox_.list(device_id, from, to);
}

void TelemetryService::finalize(UnixSeconds now) {
  for (const std::string& device : store_.devices()) {
    std::lock_guard lock(pipeline(device));
    engine_.close_through(device, auth_.owner_of(device).value_or(""), now);
  }
}

}  // namespace ieqmon
