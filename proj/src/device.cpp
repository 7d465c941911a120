#include "ieqmon/device.hpp"

#include <cmath>

#include "ieqmon/error.hpp"

namespace ieqmon {

void DeviceConfig::validate() const {
  if (!valid_device_id(device_id)) throw ConfigError("device_id: must match [A-Za-z0-9_.-]{1,64}");
  if (api_key.empty()) throw ConfigError("api_key: must be non-empty");
  if (report_interval <= 0) throw ConfigError("report_interval: must be > 0");
  if (!(drop_probability >= 0 && drop_probability <= 1)) throw ConfigError("drop_probability: must be in [0, 1]");
  if (reconnect_backoff < 0) throw ConfigError("reconnect_backoff: must be >= 0");
  if (max_flush_per_tick == 0) throw ConfigError("max_flush_per_tick: must be > 0");
}

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::init: return "INIT";
    case Phase::connecting: return "CONNECTING";
    case Phase::running: return "RUNNING";
    case Phase::retrying: return "RETRYING";
  }
  return "?";
}

RuntimeState DeviceRuntime::initialize(const DeviceConfig& config) {
  config.validate();
  RuntimeState s;
  s.phase = Phase::init;
  s.capacity = config.retry_queue_capacity;
  return s;
}

DeviceRuntime::DeviceRuntime(DeviceConfig config, DeviceSensors& sensors, Transport& transport)
    : config_(std::move(config)), sensors_(sensors), transport_(transport), state_(initialize(config_)) {
  state_.phase = Phase::connecting;
}

void DeviceRuntime::connect(UnixSeconds now) {
  if (state_.phase != Phase::connecting && state_.phase != Phase::retrying) return;
  if (now < state_.next_connect_at) return;
  ++state_.connect_attempts;
  if (transport_.connect(now)) {
    state_.phase = Phase::running;
    flush(now);
  } else {
    state_.next_connect_at = now + config_.reconnect_backoff;
  }
}

std::optional<TelemetryRecord> DeviceRuntime::acquire_cycle(UnixSeconds now) {
  if (state_.phase != Phase::running && state_.phase != Phase::retrying) {
    throw ContractViolation("acquire_cycle requires RUNNING or RETRYING");
  }
  if (last_ts_ && now <= *last_ts_) throw ContractViolation("tick timestamps must strictly increase");
  last_ts_ = now;

  const std::optional<SampleWindow> window = sensors_.energy_window(now);
  const std::optional<IeqReading> ieq = sensors_.ieq_reading(now);
  if (!window || !ieq) {
    ++counters_.skipped;
    return std::nullopt;
  }
  const FrontEndConfig& fe = sensors_.frontend();
  const MeterReading m = compute_reading(*window, fe.adc, fe.bias, sensors_.calibration(), now);

  TelemetryRecord r;
  r.device_id = config_.device_id;
  r.ts = now;
  r.v_rms = m.v_rms;
  r.i_rms = m.i_rms;
  r.active_power = m.active_power;
  r.temperature = ieq->temperature;
  r.humidity = ieq->humidity;
  r.co2 = static_cast<double>(ieq->co2);
  r.suspect = m.suspect;
  ++counters_.produced;
  return wire_rounded(r);
}

void DeviceRuntime::enqueue(const TelemetryRecord& record) {
  if (state_.capacity == 0) {
    ++counters_.dropped;
    return;
  }
  if (state_.retry_queue.size() == state_.capacity) {
    state_.retry_queue.pop_front();
    ++counters_.dropped;
  }
  state_.retry_queue.push_back(record);
}

void DeviceRuntime::fail(UnixSeconds now) {
  state_.phase = Phase::retrying;
  state_.next_connect_at = now + config_.reconnect_backoff;
}

void DeviceRuntime::flush(UnixSeconds now) {
  std::size_t sent = 0;
  while (state_.phase == Phase::running && !state_.retry_queue.empty() && sent < config_.max_flush_per_tick) {
    const Delivery d = transport_.deliver(state_.retry_queue.front(), config_.api_key, now);
    if (d == Delivery::failed) {
      fail(now);
      return;
    }
    if (d == Delivery::acked) {
      ++counters_.acked;
    } else if (d == Delivery::logged) {
      ++counters_.logged;
    } else {
      ++counters_.dropped;
      ++counters_.rejected;
    }
    state_.retry_queue.pop_front();
    ++sent;
  }
}

PostOutcome DeviceRuntime::post_record(const TelemetryRecord& record, UnixSeconds now) {
  if (state_.phase == Phase::running && state_.retry_queue.empty()) {
    switch (transport_.deliver(record, config_.api_key, now)) {
      case Delivery::acked:
        ++counters_.acked;
        return PostOutcome::acked;
      case Delivery::logged:
        ++counters_.logged;
        return PostOutcome::logged;
      case Delivery::rejected:
        ++counters_.dropped;
        ++counters_.rejected;
        return PostOutcome::dropped;
      case Delivery::failed:
        fail(now);
        break;
    }
  }
  const std::uint64_t dropped_before = counters_.dropped;
  enqueue(record);
  if (state_.phase == Phase::running) flush(now);
  if (state_.capacity == 0 && counters_.dropped > dropped_before) return PostOutcome::dropped;
  return PostOutcome::queued;
}

void DeviceRuntime::tick(UnixSeconds now) {
  ++state_.tick_count;
  if (state_.phase == Phase::init) state_.phase = Phase::connecting;
  connect(now);
  if (state_.phase == Phase::connecting) return;
  if (auto record = acquire_cycle(now)) post_record(*record, now);
}

void DeviceRuntime::drain(UnixSeconds now) {
  connect(now);
  if (state_.phase == Phase::running) flush(now);
}

}  // namespace ieqmon
