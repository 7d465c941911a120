#include "ieqmon/outbox.hpp"

#include <algorithm>
#include <json.hpp>

#include "ieqmon/error.hpp"

namespace ieqmon {

using nlohmann::ordered_json;

std::string encode_notification_line(const Notification& n) {
  ordered_json j;
  j["kind"] = to_string(n.kind);
  j["device_id"] = n.device_id;
  j["ts"] = n.created_ts;
  j["subject"] = n.subject;
  j["body"] = n.body;
  return j.dump();
}

Notification decode_notification_line(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  Notification n;
  const auto kind = parse_notification_kind(j.at("kind").get<std::string>());
  if (!kind) throw ConfigError("outbox line has unknown kind");
  n.kind = *kind;
  n.device_id = j.at("device_id").get<std::string>();
  n.created_ts = j.at("ts").get<UnixSeconds>();
  n.subject = j.at("subject").get<std::string>();
  n.body = j.at("body").get<std::string>();
  return n;
}

void MemoryOutbox::append(const Notification& n) {
  std::lock_guard lock(mu_);
  items_.push_back(n);
}

std::vector<Notification> MemoryOutbox::snapshot() const {
  std::lock_guard lock(mu_);
  return items_;
}

FileOutbox::FileOutbox(std::filesystem::path path) : path_(std::move(path)) {
  if (std::ifstream in{path_}) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        items_.push_back(decode_notification_line(line));
      } catch (const std::exception& e) {
        throw ConfigError(path_.string() + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
  }
  out_.open(path_, std::ios::app);
  if (!out_) throw ConfigError("cannot open outbox " + path_.string());
}

void FileOutbox::append(const Notification& n) {
  std::lock_guard lock(mu_);
  out_ << encode_notification_line(n) << '\n';
  out_.flush();
  if (!out_) throw std::runtime_error("outbox write failed: " + path_.string());
  items_.push_back(n);
}

std::vector<Notification> FileOutbox::list(const std::string& device_id, UnixSeconds from, UnixSeconds to) const {
  std::lock_guard lock(mu_);
  std::vector<Notification> out;
  for (const Notification& n : items_) {
    if (n.device_id == device_id && n.created_ts >= from && n.created_ts <= to) out.push_back(n);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Notification& a, const Notification& b) { return a.created_ts < b.created_ts; });
  return out;
}

std::size_t FileOutbox::size() const {
  std::lock_guard lock(mu_);
  return items_.size();
}

}  // namespace ieqmon
