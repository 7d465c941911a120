#pragma once

// Emulated firmware node: initialization, connect/reconnect, a 1 Hz
// acquire -> compute -> post loop, and a bounded drop-oldest retry queue.
//
// Phases:
//   INIT -> CONNECTING            on startup
//   CONNECTING -> RUNNING         first successful connect
//   RUNNING -> RETRYING           a delivery failed
//   RETRYING -> RUNNING           reconnect succeeded (queue is flushed oldest first)
// Acquisition runs in RUNNING and RETRYING; delivery problems never stop measurement.

#include <cstdint>
#include <deque>
#include <optional>
#include <string>

#include "ieqmon/ieq.hpp"
#include "ieqmon/metering.hpp"
#include "ieqmon/telemetry.hpp"

namespace ieqmon {

struct DeviceConfig {
  std::string device_id;
  std::string api_key;
  std::string owner = "owner";
  std::string endpoint = "http://127.0.0.1:8080";
  std::int64_t report_interval = 1;        // s
  std::size_t retry_queue_capacity = 300;
  double drop_probability = 0.0;           // simulated per-post loss
  std::int64_t reconnect_backoff = 5;      // s of (simulated) time
  std::size_t max_flush_per_tick = 64;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

enum class Phase { init, connecting, running, retrying };

std::string_view to_string(Phase p);

struct RuntimeState {
  Phase phase = Phase::init;
  std::deque<TelemetryRecord> retry_queue;
  std::size_t capacity = 0;
  std::uint64_t tick_count = 0;
  std::uint64_t connect_attempts = 0;
  UnixSeconds next_connect_at = 0;
};

struct DeviceCounters {
  std::uint64_t produced = 0;
  std::uint64_t acked = 0;
  std::uint64_t dropped = 0;   // queue overflow plus permanent rejections
  std::uint64_t rejected = 0;  // subset of dropped refused by the service (400/401)
  std::uint64_t skipped = 0;   // ticks lost to sensor faults
  std::uint64_t logged = 0;    // written to a local log instead of the service
};

/// `logged` means the record was kept locally (offline mode) rather than sent.
enum class Delivery { acked, failed, rejected, logged };

/// Abstract link to the ingestion service.
class Transport {
 public:
  virtual ~Transport() = default;
  /// Network (re)configuration attempt.
  virtual bool connect(UnixSeconds now) = 0;
  /// One POST attempt. A duplicate reply counts as acked.
  virtual Delivery deliver(const TelemetryRecord& record, const std::string& api_key, UnixSeconds now) = 0;
};

/// What the firmware samples each tick. Returning nullopt signals a sensor fault.
class DeviceSensors {
 public:
  virtual ~DeviceSensors() = default;
  virtual std::optional<SampleWindow> energy_window(UnixSeconds tick_time) = 0;
  virtual std::optional<IeqReading> ieq_reading(UnixSeconds tick_time) = 0;
  virtual const FrontEndConfig& frontend() const = 0;
  virtual const CalibrationSet& calibration() const = 0;
};

enum class PostOutcome { acked, queued, dropped, logged };

class DeviceRuntime {
 public:
  /// Validates the config and enters CONNECTING.
  DeviceRuntime(DeviceConfig config, DeviceSensors& sensors, Transport& transport);

  /// Fresh INIT state for a valid config; throws ConfigError otherwise.
  static RuntimeState initialize(const DeviceConfig& config);

  /// One connect attempt when the phase allows it and the backoff has elapsed.
  void connect(UnixSeconds now);

  /// Samples and computes one record. Requires RUNNING or RETRYING.
  /// Returns nullopt (and counts a skip) on sensor fault.
  std::optional<TelemetryRecord> acquire_cycle(UnixSeconds now);

  PostOutcome post_record(const TelemetryRecord& record, UnixSeconds now);

  /// One reporting interval: reconnect if due, acquire, post.
  void tick(UnixSeconds now);

  /// Delivery only (no acquisition): reconnect if due and flush the queue.
  void drain(UnixSeconds now);

  const RuntimeState& state() const { return state_; }
  const DeviceCounters& counters() const { return counters_; }
  const DeviceConfig& config() const { return config_; }

 private:
  void enqueue(const TelemetryRecord& record);
  void flush(UnixSeconds now);
  void fail(UnixSeconds now);

  DeviceConfig config_;
  DeviceSensors& sensors_;
  Transport& transport_;
  RuntimeState state_;
  DeviceCounters counters_;
  std::optional<UnixSeconds> last_ts_;
};

}  // namespace ieqmon
