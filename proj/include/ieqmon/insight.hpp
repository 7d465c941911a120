#pragma once

// Threshold rules over telemetry records, alert dispatch with cooldowns,
// maintain notices and daily summaries.

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ieqmon/ieq.hpp"
#include "ieqmon/telemetry.hpp"

namespace ieqmon {

enum class AnomalyKind { swell, sag, temp_high, temp_low, humidity_high, humidity_low, co2_high };

inline constexpr std::array<AnomalyKind, 7> kAllAnomalyKinds{
    AnomalyKind::swell,         AnomalyKind::sag,          AnomalyKind::temp_high, AnomalyKind::temp_low,
    AnomalyKind::humidity_high, AnomalyKind::humidity_low, AnomalyKind::co2_high};

std::string_view to_string(AnomalyKind k);
std::optional<AnomalyKind> parse_anomaly_kind(std::string_view name);

/// Default kind -> advice table. Editable through the rules section of a scenario.
std::map<AnomalyKind, std::string> default_tips();

struct RuleSet {
  double swell_threshold = 225.0;
  double sag_threshold = 219.0;
  // The IEQ bands below are site defaults, not measured comfort limits.
  Band temp_band{18.0, 28.0};
  Band humidity_band{30.0, 70.0};
  double co2_max = 1000.0;
  std::int64_t alert_cooldown = 600;    // s
  std::int64_t summary_time = 0;        // s after UTC midnight when the previous day is summarized
  std::int64_t maintain_window = 86400; // s, aligned to the epoch
  std::map<AnomalyKind, std::string> tips = default_tips();
  std::string maintain_tip =
      "All readings were within the normal range. Keep maintaining the current energy use and "
      "environmental condition.";

  void validate() const;
  const std::string& advice(AnomalyKind k) const;
};

struct AnomalyEvent {
  std::string device_id;
  UnixSeconds ts = 0;
  AnomalyKind kind = AnomalyKind::swell;
  double observed = 0.0;
  double threshold = 0.0;
};

enum class NotificationKind { alert, maintain, daily_summary };

std::string_view to_string(NotificationKind k);
std::optional<NotificationKind> parse_notification_kind(std::string_view name);

struct Notification {
  NotificationKind kind = NotificationKind::alert;
  std::string recipient;
  std::string device_id;
  UnixSeconds created_ts = 0;
  std::string subject;
  std::string body;
  std::optional<AnomalyEvent> event;  // set for alerts only
};

/// Append-only destination for notifications (file log, mail relay, test buffer).
class NotificationSink {
 public:
  virtual ~NotificationSink() = default;
  /// Throws on delivery failure; the caller keeps the notification and retries later.
  virtual void append(const Notification& n) = 0;
};

/// Read access to stored records, ascending by ts within [from, to].
class RecordSource {
 public:
  virtual ~RecordSource() = default;
  virtual std::vector<TelemetryRecord> records(const std::string& device_id, UnixSeconds from,
                                               UnixSeconds to) const = 0;
};

/// Pure, threshold-strict rule evaluation. Every violated rule yields one event.
std::vector<AnomalyEvent> evaluate(const TelemetryRecord& record, const RuleSet& rules);

struct KindCounters {
  std::uint64_t events = 0;
  std::uint64_t alerts = 0;
  std::uint64_t suppressed = 0;
};

/// Cooldown clocks and delivery backlog for one device.
struct DeviceRuleState {
  std::map<AnomalyKind, UnixSeconds> last_alert;
  std::map<AnomalyKind, KindCounters> counters;
  std::deque<Notification> pending;
  std::uint64_t delivered = 0;
};

/// Alerts for `events`, honoring the per-kind cooldown. Returns notifications written to the sink
/// during this call (including retried backlog).
std::size_t dispatch(const std::vector<AnomalyEvent>& events, const TelemetryRecord& record,
                     const RuleSet& rules, DeviceRuleState& state, NotificationSink& sink,
                     const std::string& recipient);

/// One maintain notice when a non-empty window contains no anomalies.
std::optional<Notification> maintain_notice(std::span<const TelemetryRecord> window, const RuleSet& rules,
                                            DeviceRuleState& state, NotificationSink& sink,
                                            const std::string& recipient, UnixSeconds window_end);

struct MetricStats {
  std::size_t count = 0;
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

struct DailySummary {
  std::string device_id;
  std::int64_t day = 0;  // days since epoch
  bool empty = true;
  std::array<MetricStats, kAllMetrics.size()> stats{};
  std::map<AnomalyKind, std::uint64_t> event_counts;

  const MetricStats& of(Metric m) const { return stats[static_cast<std::size_t>(m)]; }
};

/// Statistics over exactly the given records (assumed to be one device-day).
DailySummary summarize(const std::string& device_id, std::int64_t day,
                       std::span<const TelemetryRecord> records, const RuleSet& rules);

/// Summarizes the day from `source` and delivers one daily_summary notification.
std::pair<DailySummary, Notification> daily_summary(const std::string& device_id, std::int64_t day,
                                                    const RecordSource& source, const RuleSet& rules,
                                                    DeviceRuleState& state, NotificationSink& sink,
                                                    const std::string& recipient);

/// Per-device evaluation contexts driven in ingest order.
class InsightEngine {
 public:
  InsightEngine(RuleSet rules, NotificationSink& sink, const RecordSource& source);

  /// Closes finished windows, then evaluates and dispatches for `record`.
  std::vector<AnomalyEvent> on_record(const TelemetryRecord& record, const std::string& recipient);

  /// Emits maintain notices and daily summaries that are due at `now`.
  void close_through(const std::string& device_id, const std::string& recipient, UnixSeconds now);

  std::map<AnomalyKind, KindCounters> counters(const std::string& device_id) const;
  std::size_t pending(const std::string& device_id) const;
  const RuleSet& rules() const { return rules_; }

 private:
  struct Context {
    mutable std::mutex mu;
    DeviceRuleState state;
    std::set<std::int64_t> open_windows;
    std::set<std::int64_t> open_days;
  };

  Context& context(const std::string& device_id);
  const Context* find(const std::string& device_id) const;
  void close_locked(Context& ctx, const std::string& device_id, const std::string& recipient,
                    UnixSeconds now);

  RuleSet rules_;
  NotificationSink& sink_;
  const RecordSource& source_;
  mutable std::mutex map_mu_;
  std::unordered_map<std::string, std::unique_ptr<Context>> contexts_;
};

}  // namespace ieqmon
