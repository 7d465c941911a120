#pragma once

// Append-only per-device record logs with an in-memory index rebuilt on open.
//
// Layout under the data directory:
//   LOCK                   exclusive advisory lock held while the store is open
//   records/<device>.log   one JSON line per accepted record

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ieqmon/insight.hpp"
#include "ieqmon/telemetry.hpp"

namespace ieqmon {

struct StoredRecord {
  TelemetryRecord record;
  std::uint64_t ingest_sequence = 0;
};

/// Another process (or another store object) already owns the data directory.
class StoreLockedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class AppendStatus { stored, duplicate };

struct AppendResult {
  AppendStatus status = AppendStatus::stored;
  std::uint64_t ingest_sequence = 0;  // 0 for duplicates
};

using SeriesPoint = std::pair<UnixSeconds, double>;

class TelemetryStore : public RecordSource {
 public:
  /// Creates the directory if needed, takes the lock and replays existing logs.
  explicit TelemetryStore(std::filesystem::path dir, bool sync_writes = false);
  ~TelemetryStore() override;

  TelemetryStore(const TelemetryStore&) = delete;
  TelemetryStore& operator=(const TelemetryStore&) = delete;

  /// Durably appends unless (device_id, ts) already exists.
  AppendResult append(const TelemetryRecord& record);

  std::vector<SeriesPoint> query(const std::string& device_id, Metric metric, UnixSeconds from,
                                 UnixSeconds to) const;
  std::vector<TelemetryRecord> records(const std::string& device_id, UnixSeconds from,
                                       UnixSeconds to) const override;
  std::vector<StoredRecord> stored(const std::string& device_id, UnixSeconds from, UnixSeconds to) const;

  std::size_t size() const;
  std::vector<std::string> devices() const;
  std::size_t size(const std::string& device_id) const;
  std::uint64_t last_sequence() const { return sequence_.load(); }
  const std::filesystem::path& directory() const { return dir_; }

  /// Encodes one log line (also used by offline device logs).
  static std::string encode_line(const StoredRecord& r);
  static StoredRecord decode_line(const std::string& line);

 private:
  struct Shard {
    mutable std::shared_mutex mu;
    std::map<UnixSeconds, StoredRecord> by_ts;
    std::FILE* log = nullptr;
  };

  Shard& shard(const std::string& device_id);
  const Shard* find(const std::string& device_id) const;
  void replay(const std::filesystem::path& log, const std::string& device_id);

  std::filesystem::path dir_;
  bool sync_writes_;
  int lock_fd_ = -1;
  std::atomic<std::uint64_t> sequence_{0};
  mutable std::shared_mutex shards_mu_;
  std::unordered_map<std::string, std::unique_ptr<Shard>> shards_;
};

}  // namespace ieqmon
