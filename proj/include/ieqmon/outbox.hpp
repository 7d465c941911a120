#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include "ieqmon/insight.hpp"

namespace ieqmon {

/// One JSON line: {"kind","device_id","ts","subject","body"}.
std::string encode_notification_line(const Notification& n);
Notification decode_notification_line(const std::string& line);

/// In-memory sink, mostly for tests.
class MemoryOutbox : public NotificationSink {
 public:
  void append(const Notification& n) override;
  std::vector<Notification> snapshot() const;

 private:
  mutable std::mutex mu_;
  std::vector<Notification> items_;
};

/// Append-only notification log on disk, with an in-memory copy for queries.
class FileOutbox : public NotificationSink {
 public:
  explicit FileOutbox(std::filesystem::path path);

  void append(const Notification& n) override;

  /// Notifications for `device_id` with from <= created_ts <= to, ordered by created_ts.
  std::vector<Notification> list(const std::string& device_id, UnixSeconds from, UnixSeconds to) const;
  std::size_t size() const;

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::ofstream out_;
  std::vector<Notification> items_;
};

}  // namespace ieqmon
