#include "ieqmon/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <mutex>

#include "ieqmon/error.hpp"

namespace ieqmon {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string TelemetryStore::encode_line(const StoredRecord& s) {
  const TelemetryRecord& r = s.record;
  ordered_json j;
  j["seq"] = s.ingest_sequence;
  j["device_id"] = r.device_id;
  j["ts"] = r.ts;
  j["vrms"] = r.v_rms;
  j["irms"] = r.i_rms;
  j["power"] = r.active_power;
  j["temp"] = r.temperature;
  j["humidity"] = r.humidity;
  j["co2"] = r.co2;
  j["suspect"] = r.suspect;
  return j.dump();
}

StoredRecord TelemetryStore::decode_line(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  StoredRecord s;
  s.ingest_sequence = j.at("seq").get<std::uint64_t>();
  TelemetryRecord& r = s.record;
  r.device_id = j.at("device_id").get<std::string>();
  r.ts = j.at("ts").get<UnixSeconds>();
  r.v_rms = j.at("vrms").get<double>();
  r.i_rms = j.at("irms").get<double>();
  r.active_power = j.at("power").get<double>();
  r.temperature = j.at("temp").get<double>();
  r.humidity = j.at("humidity").get<double>();
  r.co2 = j.at("co2").get<double>();
  r.suspect = j.at("suspect").get<bool>();
  return s;
}

TelemetryStore::TelemetryStore(fs::path dir, bool sync_writes) : dir_(std::move(dir)), sync_writes_(sync_writes) {
  fs::create_directories(dir_ / "records");
  const fs::path lock_path = dir_ / "LOCK";
  lock_fd_ = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (lock_fd_ < 0) throw ConfigError("cannot open " + lock_path.string());
  if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(lock_fd_);
    lock_fd_ = -1;
    throw StoreLockedError("data directory " + dir_.string() + " is in use by another instance");
  }
  for (const auto& entry : fs::directory_iterator(dir_ / "records")) {
    if (entry.path().extension() != ".log") continue;
    replay(entry.path(), entry.path().stem().string());
  }
}

TelemetryStore::~TelemetryStore() {
  for (auto& [id, shard] : shards_) {
    if (shard->log) std::fclose(shard->log);
  }
  if (lock_fd_ >= 0) {
    ::flock(lock_fd_, LOCK_UN);
    ::close(lock_fd_);
  }
}

void TelemetryStore::replay(const fs::path& log, const std::string& device_id) {
  Shard& s = shard(device_id);
  std::ifstream in(log, std::ios::binary);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  std::size_t lineno = 0;
  std::size_t good_bytes = 0;
  while (pos < content.size()) {
    const std::size_t nl = content.find('\n', pos);
    ++lineno;
    if (nl == std::string::npos) break;  // torn final write, dropped below
    const std::string line = content.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) {
      good_bytes = pos;
      continue;
    }
    StoredRecord rec;
    try {
      rec = decode_line(line);
    } catch (const std::exception& e) {
      throw ConfigError(log.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (sequence_.load() < rec.ingest_sequence) sequence_.store(rec.ingest_sequence);
    s.by_ts.emplace(rec.record.ts, std::move(rec));
    good_bytes = pos;
  }
  if (good_bytes < content.size()) fs::resize_file(log, good_bytes);
}

TelemetryStore::Shard& TelemetryStore::shard(const std::string& device_id) {
  {
    std::shared_lock lock(shards_mu_);
    auto it = shards_.find(device_id);
    if (it != shards_.end()) return *it->second;
  }
  std::unique_lock lock(shards_mu_);
  auto& slot = shards_[device_id];
  if (!slot) slot = std::make_unique<Shard>();
  return *slot;
}

const TelemetryStore::Shard* TelemetryStore::find(const std::string& device_id) const {
  std::shared_lock lock(shards_mu_);
  auto it = shards_.find(device_id);
  return it == shards_.end() ? nullptr : it->second.get();
}

AppendResult TelemetryStore::append(const TelemetryRecord& record) {
  if (!valid_device_id(record.device_id)) throw ConfigError("invalid device id '" + record.device_id + "'");
  Shard& s = shard(record.device_id);
  std::unique_lock lock(s.mu);
  if (s.by_ts.contains(record.ts)) return {AppendStatus::duplicate, 0};
  if (!s.log) {
    const fs::path path = dir_ / "records" / (record.device_id + ".log");
    s.log = std::fopen(path.c_str(), "ab");
    if (!s.log) throw std::runtime_error("cannot open " + path.string());
  }
  StoredRecord stored{record, sequence_.fetch_add(1) + 1};
  const std::string line = encode_line(stored) + '\n';
  if (std::fwrite(line.data(), 1, line.size(), s.log) != line.size() || std::fflush(s.log) != 0) {
    throw std::runtime_error("record log write failed for " + record.device_id);
  }
  if (sync_writes_) ::fdatasync(::fileno(s.log));
  s.by_ts.emplace(record.ts, std::move(stored));
  return {AppendStatus::stored, s.by_ts.at(record.ts).ingest_sequence};
}

std::vector<StoredRecord> TelemetryStore::stored(const std::string& device_id, UnixSeconds from,
                                                 UnixSeconds to) const {
  std::vector<StoredRecord> out;
  const Shard* s = find(device_id);
  if (!s || from > to) return out;
  std::shared_lock lock(s->mu);
  for (auto it = s->by_ts.lower_bound(from); it != s->by_ts.end() && it->first <= to; ++it) {
    out.push_back(it->second);
  }
  return out;
}

std::vector<TelemetryRecord> TelemetryStore::records(const std::string& device_id, UnixSeconds from,
                                                     UnixSeconds to) const {
  std::vector<TelemetryRecord> out;
  for (StoredRecord& s : stored(device_id, from, to)) out.push_back(std::move(s.record));
  return out;
}

std::vector<SeriesPoint> TelemetryStore::query(const std::string& device_id, Metric metric, UnixSeconds from,
                                               UnixSeconds to) const {
  std::vector<SeriesPoint> out;
  const Shard* s = find(device_id);
  if (!s || from > to) return out;
  std::shared_lock lock(s->mu);
  for (auto it = s->by_ts.lower_bound(from); it != s->by_ts.end() && it->first <= to; ++it) {
    out.emplace_back(it->first, metric_value(it->second.record, metric));
  }
  return out;
}

std::size_t TelemetryStore::size() const {
  std::shared_lock lock(shards_mu_);
  std::size_t n = 0;
  for (const auto& [id, s] : shards_) {
    std::shared_lock inner(s->mu);
    n += s->by_ts.size();
  }
  return n;
}

std::vector<std::string> TelemetryStore::devices() const {
  std::shared_lock lock(shards_mu_);
  std::vector<std::string> out;
  for (const auto& [id, s] : shards_) out.push_back(id);
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t TelemetryStore::size(const std::string& device_id) const {
  const Shard* s = find(device_id);
  if (!s) return 0;
  std::shared_lock lock(s->mu);
  return s->by_ts.size();
}

}  // namespace ieqmon
