#pragma once

// Ingestion, storage, queries and notification listing behind the HTTP API.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ieqmon/auth.hpp"
#include "ieqmon/insight.hpp"
#include "ieqmon/outbox.hpp"
#include "ieqmon/store.hpp"

namespace ieqmon {

/// Request rejected by input validation (HTTP 400). `field` names the first bad input.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::runtime_error(what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class IngestStatus { stored, duplicate, invalid, unauthorized };

struct IngestResult {
  IngestStatus status = IngestStatus::stored;
  std::string detail;  // offending field for invalid, reason otherwise
  std::uint64_t ingest_sequence = 0;

  /// 200 stored, 409 duplicate, 400 invalid, 401 unauthorized.
  int http_status() const;
};

struct ServiceOptions {
  std::filesystem::path data_dir;
  RuleSet rules;
  bool sync_writes = false;
};

class TelemetryService {
 public:
  /// Opens (and locks) the data directory. Throws StoreLockedError if it is taken.
  TelemetryService(ServiceOptions options, AuthRegistry& auth);

  /// Validates, authenticates, de-duplicates and appends; stored records go to the
  /// insight engine in ingest order.
  IngestResult ingest(std::string_view body);

  SessionToken authenticate(const std::string& username, const std::string& password);

  /// Points with from <= ts <= to, ascending. Throws AuthError / ValidationError.
  std::vector<SeriesPoint> query_series(const std::string& token, const std::string& device_id,
                                        std::string_view metric, UnixSeconds from, UnixSeconds to) const;

  std::vector<Notification> list_notifications(const std::string& token, const std::string& device_id,
                                               UnixSeconds from, UnixSeconds to) const;

  /// Closes every maintain window and daily summary due at `now`.
  void finalize(UnixSeconds now);

  const RuleSet& rules() const { return engine_.rules(); }
  const AuthRegistry& auth() const { return auth_; }
  TelemetryStore& store() { return store_; }
  const TelemetryStore& store() const { return store_; }
  FileOutbox& outbox() { return outbox_; }
  InsightEngine& insight() { return engine_; }

 private:
  std::mutex& pipeline(const std::string& device_id);

  AuthRegistry& auth_;
  TelemetryStore store_;
  FileOutbox outbox_;
  InsightEngine engine_;
  std::mutex pipelines_mu_;
  std::unordered_map<std::string, std::unique_ptr<std::mutex>> pipelines_;
};

}  // namespace ieqmon
