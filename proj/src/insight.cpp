#include "ieqmon/insight.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <limits>

#include "ieqmon/error.hpp"

namespace ieqmon {

std::string_view to_string(AnomalyKind k) {
  switch (k) {
    case AnomalyKind::swell: return "swell";
    case AnomalyKind::sag: return "sag";
    case AnomalyKind::temp_high: return "temp_high";
    case AnomalyKind::temp_low: return "temp_low";
    case AnomalyKind::humidity_high: return "humidity_high";
    case AnomalyKind::humidity_low: return "humidity_low";
    case AnomalyKind::co2_high: return "co2_high";
  }
  return "?";
}

std::optional<AnomalyKind> parse_anomaly_kind(std::string_view name) {
  for (AnomalyKind k : kAllAnomalyKinds) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::string_view to_string(NotificationKind k) {
  switch (k) {
    case NotificationKind::alert: return "alert";
    case NotificationKind::maintain: return "maintain";
    case NotificationKind::daily_summary: return "daily_summary";
  }
  return "?";
}

std::optional<NotificationKind> parse_notification_kind(std::string_view name) {
  for (auto k : {NotificationKind::alert, NotificationKind::maintain, NotificationKind::daily_summary}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::map<AnomalyKind, std::string> default_tips() {
  return {
      {AnomalyKind::swell,
       "Supply voltage rose above the normal range. Please check the power system and protect "
       "sensitive appliances with surge protection."},
      {AnomalyKind::sag,
       "Supply voltage dropped below the normal range. Please check the power system; large loads "
       "starting at once can also pull the voltage down."},
      {AnomalyKind::temp_high,
       "Indoor temperature is above the acceptable range. Improve ventilation, use shading or adjust "
       "the cooling setpoint."},
      {AnomalyKind::temp_low,
       "Indoor temperature is below the acceptable range. Close drafts or adjust the heating setpoint."},
      {AnomalyKind::humidity_high,
       "Humidity is above the acceptable range. Ventilate the room or run a dehumidifier."},
      {AnomalyKind::humidity_low, "Humidity is below the acceptable range. Consider a humidifier."},
      {AnomalyKind::co2_high,
       "CO2 concentration is high. Open a window or increase ventilation to bring in fresh air."},
  };
}

void RuleSet::validate() const {
  if (!(sag_threshold < swell_threshold)) throw ConfigError("rules: sag_threshold must be < swell_threshold");
  if (!(temp_band.min <= temp_band.max)) throw ConfigError("rules: temp_band must be ordered");
  if (!(humidity_band.min <= humidity_band.max)) throw ConfigError("rules: humidity_band must be ordered");
  if (alert_cooldown < 0) throw ConfigError("rules: alert_cooldown must be >= 0");
  if (summary_time < 0 || summary_time >= kSecondsPerDay) {
    throw ConfigError("rules: summary_time must be within one day");
  }
  if (maintain_window <= 0) throw ConfigError("rules: maintain_window must be > 0");
}

const std::string& RuleSet::advice(AnomalyKind k) const {
  static const std::string none;
  auto it = tips.find(k);
  return it == tips.end() ? none : it->second;
}

std::vector<AnomalyEvent> evaluate(const TelemetryRecord& r, const RuleSet& rules) {
  std::vector<AnomalyEvent> out;
  auto add = [&](AnomalyKind k, double observed, double threshold) {
    out.push_back({r.device_id, r.ts, k, observed, threshold});
  };
  if (r.v_rms > rules.swell_threshold) add(AnomalyKind::swell, r.v_rms, rules.swell_threshold);
  if (r.v_rms < rules.sag_threshold) add(AnomalyKind::sag, r.v_rms, rules.sag_threshold);
  if (r.temperature > rules.temp_band.max) add(AnomalyKind::temp_high, r.temperature, rules.temp_band.max);
  if (r.temperature < rules.temp_band.min) add(AnomalyKind::temp_low, r.temperature, rules.temp_band.min);
  if (r.humidity > rules.humidity_band.max) {
    add(AnomalyKind::humidity_high, r.humidity, rules.humidity_band.max);
  }
  if (r.humidity < rules.humidity_band.min) {
    add(AnomalyKind::humidity_low, r.humidity, rules.humidity_band.min);
  }
  if (r.co2 > rules.co2_max) add(AnomalyKind::co2_high, r.co2, rules.co2_max);
  return out;
}

namespace {

struct KindText {
  const char* title;
  const char* unit;
  const char* relation;
};

KindText describe(AnomalyKind k) {
  switch (k) {
    case AnomalyKind::swell: return {"Voltage swell", "V", "above"};
    case AnomalyKind::sag: return {"Voltage sag", "V", "below"};
    case AnomalyKind::temp_high: return {"High air temperature", "degC", "above"};
    case AnomalyKind::temp_low: return {"Low air temperature", "degC", "below"};
    case AnomalyKind::humidity_high: return {"High humidity", "%RH", "above"};
    case AnomalyKind::humidity_low: return {"Low humidity", "%RH", "below"};
    case AnomalyKind::co2_high: return {"High CO2 concentration", "ppm", "above"};
  }
  return {"Anomaly", "", "beyond"};
}

Notification make_alert(const AnomalyEvent& ev, const RuleSet& rules, const std::string& recipient) {
  const KindText text = describe(ev.kind);
  Notification n;
  n.kind = NotificationKind::alert;
  n.recipient = recipient;
  n.device_id = ev.device_id;
  n.created_ts = ev.ts;
  n.subject = fmt::format("{} on {}", text.title, ev.device_id);
  n.body = fmt::format("{} {:.2f} {} at {}, {} the {:.2f} {} threshold. {}", text.title, ev.observed,
                       text.unit, format_timestamp(ev.ts), text.relation, ev.threshold, text.unit,
                       rules.advice(ev.kind));
  n.event = ev;
  return n;
}

std::size_t flush_pending(DeviceRuleState& state, NotificationSink& sink) {
  std::size_t written = 0;
  while (!state.pending.empty()) {
    try {
      sink.append(state.pending.front());
    } catch (const std::exception&) {
      break;
    }
    state.pending.pop_front();
    ++state.delivered;
    ++written;
  }
  return written;
}

std::size_t deliver(DeviceRuleState& state, NotificationSink& sink, Notification n) {
  if (!state.pending.empty()) {
    state.pending.push_back(std::move(n));
    return flush_pending(state, sink);
  }
  try {
    sink.append(n);
  } catch (const std::exception&) {
    state.pending.push_back(std::move(n));
    return 0;
  }
  ++state.delivered;
  return 1;
}

}  // namespace

std::size_t dispatch(const std::vector<AnomalyEvent>& events, const TelemetryRecord& record,
                     const RuleSet& rules, DeviceRuleState& state, NotificationSink& sink,
                     const std::string& recipient) {
  std::size_t written = flush_pending(state, sink);
  for (const AnomalyEvent& ev : events) {
    KindCounters& c = state.counters[ev.kind];
    ++c.events;
    auto last = state.last_alert.find(ev.kind);
    if (last != state.last_alert.end() && record.ts - last->second < rules.alert_cooldown) {
      ++c.suppressed;
      continue;
    }
    state.last_alert[ev.kind] = record.ts;
    ++c.alerts;
    written += deliver(state, sink, make_alert(ev, rules, recipient));
  }
  return written;
}

std::optional<Notification> maintain_notice(std::span<const TelemetryRecord> window, const RuleSet& rules,
                                            DeviceRuleState& state, NotificationSink& sink,
                                            const std::string& recipient, UnixSeconds window_end) {
  if (window.empty()) return std::nullopt;
  for (const TelemetryRecord& r : window) {
    if (!evaluate(r, rules).empty()) return std::nullopt;
  }
  Notification n;
  n.kind = NotificationKind::maintain;
  n.recipient = recipient;
  n.device_id = window.front().device_id;
  n.created_ts = window_end;
  n.subject = fmt::format("All readings normal on {}", n.device_id);
  n.body = fmt::format("{} records from {} to {} stayed within the configured limits. {}", window.size(),
                       format_timestamp(window.front().ts), format_timestamp(window.back().ts),
                       rules.maintain_tip);
  deliver(state, sink, n);
  return n;
}

DailySummary summarize(const std::string& device_id, std::int64_t day,
                       std::span<const TelemetryRecord> records, const RuleSet& rules) {
  DailySummary s;
  s.device_id = device_id;
  s.day = day;
  s.empty = records.empty();
  for (AnomalyKind k : kAllAnomalyKinds) s.event_counts[k] = 0;
  for (std::size_t m = 0; m < kAllMetrics.size(); ++m) {
    MetricStats& st = s.stats[m];
    if (records.empty()) continue;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double acc = 0.0;
    for (const TelemetryRecord& r : records) {
      const double v = metric_value(r, kAllMetrics[m]);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      acc += v;
    }
    st = {records.size(), lo, acc / static_cast<double>(records.size()), hi};
  }
  for (const TelemetryRecord& r : records) {
    for (const AnomalyEvent& ev : evaluate(r, rules)) ++s.event_counts[ev.kind];
  }
  return s;
}

std::pair<DailySummary, Notification> daily_summary(const std::string& device_id, std::int64_t day,
                                                    const RecordSource& source, const RuleSet& rules,
                                                    DeviceRuleState& state, NotificationSink& sink,
                                                    const std::string& recipient) {
  const UnixSeconds from = day * kSecondsPerDay;
  const std::vector<TelemetryRecord> records = source.records(device_id, from, from + kSecondsPerDay - 1);
  DailySummary s = summarize(device_id, day, records, rules);

  Notification n;
  n.kind = NotificationKind::daily_summary;
  n.recipient = recipient;
  n.device_id = device_id;
  n.created_ts = from + kSecondsPerDay + rules.summary_time;
  n.subject = fmt::format("Daily summary for {} on {}", device_id, format_date(day));
  if (s.empty) {
    n.body = "No data was recorded on this date.";
  } else {
    std::string body = fmt::format("{} records.", records.size());
    for (Metric m : kAllMetrics) {
      const MetricStats& st = s.of(m);
      body += fmt::format(" {}: min {:.3f} mean {:.3f} max {:.3f};", to_string(m), st.min, st.mean, st.max);
    }
    body += " events:";
    for (const auto& [kind, count] : s.event_counts) body += fmt::format(" {}={}", to_string(kind), count);
    n.body = std::move(body);
  }
  deliver(state, sink, n);
  return {std::move(s), std::move(n)};
}

InsightEngine::InsightEngine(RuleSet rules, NotificationSink& sink, const RecordSource& source)
    : rules_(std::move(rules)), sink_(sink), source_(source) {
  rules_.validate();
}

InsightEngine::Context& InsightEngine::context(const std::string& device_id) {
  std::lock_guard lock(map_mu_);
  auto& slot = contexts_[device_id];
  if (!slot) slot = std::make_unique<Context>();
  return *slot;
}

const InsightEngine::Context* InsightEngine::find(const std::string& device_id) const {
  std::lock_guard lock(map_mu_);
  auto it = contexts_.find(device_id);
  return it == contexts_.end() ? nullptr : it->second.get();
}

std::vector<AnomalyEvent> InsightEngine::on_record(const TelemetryRecord& record, const std::string& recipient) {
  Context& ctx = context(record.device_id);
  std::lock_guard lock(ctx.mu);
  close_locked(ctx, record.device_id, recipient, record.ts);
  const std::int64_t window = record.ts >= 0 ? record.ts / rules_.maintain_window
                                             : -((-record.ts + rules_.maintain_window - 1) / rules_.maintain_window);
  ctx.open_windows.insert(window);
  ctx.open_days.insert(day_index(record.ts));

  std::vector<AnomalyEvent> events = evaluate(record, rules_);
  dispatch(events, record, rules_, ctx.state, sink_, recipient);
  return events;
}

void InsightEngine::close_through(const std::string& device_id, const std::string& recipient, UnixSeconds now) {
  Context& ctx = context(device_id);
  std::lock_guard lock(ctx.mu);
  close_locked(ctx, device_id, recipient, now);
}

void InsightEngine::close_locked(Context& ctx, const std::string& device_id, const std::string& recipient,
                                 UnixSeconds now) {
  const std::int64_t len = rules_.maintain_window;
  while (!ctx.open_windows.empty() && (*ctx.open_windows.begin() + 1) * len <= now) {
    const std::int64_t w = *ctx.open_windows.begin();
    ctx.open_windows.erase(ctx.open_windows.begin());
    const std::vector<TelemetryRecord> recs = source_.records(device_id, w * len, (w + 1) * len - 1);
    maintain_notice(recs, rules_, ctx.state, sink_, recipient, (w + 1) * len);
  }
  while (!ctx.open_days.empty() &&
         (*ctx.open_days.begin() + 1) * kSecondsPerDay + rules_.summary_time <= now) {
    const std::int64_t day = *ctx.open_days.begin();
    ctx.open_days.erase(ctx.open_days.begin());
    daily_summary(device_id, day, source_, rules_, ctx.state, sink_, recipient);
  }
}

std::map<AnomalyKind, KindCounters> InsightEngine::counters(const std::string& device_id) const {
  const Context* ctx = find(device_id);
  if (!ctx) return {};
  std::lock_guard lock(ctx->mu);
  return ctx->state.counters;
}

std::size_t InsightEngine::pending(const std::string& device_id) const {
  const Context* ctx = find(device_id);
  if (!ctx) return 0;
  std::lock_guard lock(ctx->mu);
  return ctx->state.pending.size();
}

}  // namespace ieqmon
