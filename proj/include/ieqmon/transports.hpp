#pragma once

// Transport implementations: direct in-process ingestion, HTTP, a local
// offline log, and a fault-injecting wrapper for simulated Wi-Fi trouble.

#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "ieqmon/device.hpp"
#include "ieqmon/http_client.hpp"
#include "ieqmon/service.hpp"
#include "ieqmon/waveform.hpp"

namespace ieqmon {

/// Hands the exact wire body to a TelemetryService in the same process.
class InProcessTransport : public Transport {
 public:
  explicit InProcessTransport(TelemetryService& service) : service_(service) {}
  bool connect(UnixSeconds) override { return true; }
  Delivery deliver(const TelemetryRecord& record, const std::string& api_key, UnixSeconds now) override;

 private:
  TelemetryService& service_;
};

class HttpTransport : public Transport {
 public:
  explicit HttpTransport(const std::string& endpoint, double timeout_seconds = 2.0);
  bool connect(UnixSeconds now) override;
  Delivery deliver(const TelemetryRecord& record, const std::string& api_key, UnixSeconds now) override;

 private:
  ApiClient client_;
};

/// Appends wire bodies (without the api key) to a JSON-lines file.
class OfflineLogTransport : public Transport {
 public:
  explicit OfflineLogTransport(const std::string& path);
  bool connect(UnixSeconds) override { return true; }
  Delivery deliver(const TelemetryRecord& record, const std::string& api_key, UnixSeconds now) override;

 private:
  std::mutex mu_;
  std::ofstream out_;
};

/// Wraps another transport with random post loss and scheduled outages.
/// Outage intervals are absolute unix seconds, half-open.
class FaultyTransport : public Transport {
 public:
  FaultyTransport(Transport& inner, double drop_probability, std::vector<Interval> outages, std::uint64_t seed);

  bool connect(UnixSeconds now) override;
  Delivery deliver(const TelemetryRecord& record, const std::string& api_key, UnixSeconds now) override;

  /// Network recovery: stop injecting random loss.
  void set_drop_probability(double p) { drop_probability_ = p; }
  std::uint64_t injected_drops() const { return injected_drops_; }

 private:
  bool in_outage(UnixSeconds now) const;

  Transport& inner_;
  double drop_probability_;
  std::vector<Interval> outages_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::uint64_t injected_drops_ = 0;
};

/// Test double: link down for the first `failures` connect attempts.
class ScriptedTransport : public Transport {
 public:
  explicit ScriptedTransport(std::uint64_t failures, bool deliveries_succeed = true)
      : failures_(failures), deliveries_succeed_(deliveries_succeed) {}

  bool connect(UnixSeconds now) override;
  Delivery deliver(const TelemetryRecord& record, const std::string& api_key, UnixSeconds now) override;

  void set_deliveries_succeed(bool ok) { deliveries_succeed_ = ok; }
  const std::vector<UnixSeconds>& connect_times() const { return connect_times_; }
  const std::vector<TelemetryRecord>& delivered() const { return delivered_; }

 private:
  std::uint64_t failures_;
  bool deliveries_succeed_;
  std::vector<UnixSeconds> connect_times_;
  std::vector<TelemetryRecord> delivered_;
};

}  // namespace ieqmon
