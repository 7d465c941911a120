#include <doctest.h>

#include <algorithm>
#include <random>
#include <stdexcept>

#include "ieqmon/error.hpp"
#include "ieqmon/insight.hpp"
#include "ieqmon/outbox.hpp"
#include "support.hpp"

using namespace ieqmon;
using testing::record;

namespace {

class VectorSource : public RecordSource {
 public:
  std::vector<TelemetryRecord> recs;
  std::vector<TelemetryRecord> records(const std::string& device, UnixSeconds from, UnixSeconds to) const override {
    std::vector<TelemetryRecord> out;
    for (const auto& r : recs) {
      if (r.device_id == device && r.ts >= from && r.ts <= to) out.push_back(r);
    }
    return out;
  }
};

class FlakySink : public NotificationSink {
 public:
  bool up = true;
  std::vector<Notification> got;
  void append(const Notification& n) override {
    if (!up) throw std::runtime_error("sink down");
    got.push_back(n);
  }
};

std::vector<AnomalyKind> kinds(const std::vector<AnomalyEvent>& evs) {
  std::vector<AnomalyKind> out;
  for (const auto& e : evs) out.push_back(e.kind);
  return out;
}

std::size_t count_kind(const std::vector<Notification>& ns, NotificationKind k) {
  return std::count_if(ns.begin(), ns.end(), [k](const Notification& n) { return n.kind == k; });
}

}  // namespace

TEST_CASE("evaluate examples") {
  const RuleSet rules;
  auto evs = evaluate(record("n", 1, 226.0), rules);
  REQUIRE(evs.size() == 1);
  CHECK(evs[0].kind == AnomalyKind::swell);
  CHECK(evs[0].observed == 226.0);
  CHECK(evs[0].threshold == 225.0);

  CHECK(evaluate(record("n", 1, 222.0), rules).empty());

  TelemetryRecord r = record("n", 1, 218.0);
  r.co2 = 2000;
  CHECK(kinds(evaluate(r, rules)) == std::vector<AnomalyKind>{AnomalyKind::sag, AnomalyKind::co2_high});
}

TEST_CASE("thresholds are strict") {
  const RuleSet rules;
  CHECK(evaluate(record("n", 1, 225.0), rules).empty());
  CHECK(evaluate(record("n", 1, 219.0), rules).empty());
  CHECK(evaluate(record("n", 1, 225.0001), rules).size() == 1);
  CHECK(evaluate(record("n", 1, 218.9999), rules).size() == 1);
  TelemetryRecord r = record("n", 1);
  r.temperature = 28.0;
  r.humidity = 30.0;
  r.co2 = 1000.0;
  CHECK(evaluate(r, rules).empty());
}

TEST_CASE("ieq band events") {
  const RuleSet rules;
  TelemetryRecord r = record("n", 1);
  r.temperature = 30;
  r.humidity = 20;
  CHECK(kinds(evaluate(r, rules)) == std::vector<AnomalyKind>{AnomalyKind::temp_high, AnomalyKind::humidity_low});
  r.temperature = 10;
  r.humidity = 80;
  CHECK(kinds(evaluate(r, rules)) == std::vector<AnomalyKind>{AnomalyKind::temp_low, AnomalyKind::humidity_high});
}

TEST_CASE("property: evaluate matches independent per-rule checks") {
  const RuleSet rules;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> v(210, 235), t(10, 35), h(20, 80), c(300, 1500);
  for (int n = 0; n < 3000; ++n) {
    TelemetryRecord r = record("n", n, v(rng));
    r.temperature = t(rng);
    r.humidity = h(rng);
    r.co2 = c(rng);
    std::vector<AnomalyKind> expected;
    if (r.v_rms > 225) expected.push_back(AnomalyKind::swell);
    if (r.v_rms < 219) expected.push_back(AnomalyKind::sag);
    if (r.temperature > 28) expected.push_back(AnomalyKind::temp_high);
    if (r.temperature < 18) expected.push_back(AnomalyKind::temp_low);
    if (r.humidity > 70) expected.push_back(AnomalyKind::humidity_high);
    if (r.humidity < 30) expected.push_back(AnomalyKind::humidity_low);
    if (r.co2 > 1000) expected.push_back(AnomalyKind::co2_high);
    auto got = kinds(evaluate(r, rules));
    std::sort(got.begin(), got.end());
    std::sort(expected.begin(), expected.end());
    CHECK(got == expected);
    for (const auto& e : evaluate(r, rules)) {
      const bool above = e.observed > e.threshold, below = e.observed < e.threshold;
      CHECK((above || below));
    }
  }
}

TEST_CASE("first swell alerts with advice, repeats inside the cooldown are suppressed") {
  const RuleSet rules;
  DeviceRuleState st;
  MemoryOutbox out;
  const auto r1 = record("n", 1000, 230.0);
  CHECK(dispatch(evaluate(r1, rules), r1, rules, st, out, "demo") == 1);
  const auto r2 = record("n", 1010, 230.0);
  CHECK(dispatch(evaluate(r2, rules), r2, rules, st, out, "demo") == 0);
  const auto items = out.snapshot();
  REQUIRE(items.size() == 1);
  CHECK(items[0].kind == NotificationKind::alert);
  CHECK(items[0].body.find("check the power system") != std::string::npos);
  CHECK(items[0].body.find("230") != std::string::npos);
  CHECK(items[0].body.find("225") != std::string::npos);
  REQUIRE(items[0].event.has_value());
  CHECK(items[0].event->kind == AnomalyKind::swell);
  CHECK(items[0].recipient == "demo");
  CHECK(st.counters[AnomalyKind::swell].suppressed == 1);
  CHECK(st.counters[AnomalyKind::swell].alerts == 1);

  const auto r3 = record("n", 1600, 230.0);
  CHECK(dispatch(evaluate(r3, rules), r3, rules, st, out, "demo") == 1);
}

TEST_CASE("normal record dispatches nothing") {
  const RuleSet rules;
  DeviceRuleState st;
  MemoryOutbox out;
  const auto r = record("n", 1);
  CHECK(dispatch(evaluate(r, rules), r, rules, st, out, "demo") == 0);
  CHECK(out.snapshot().empty());
}

TEST_CASE("property: alerts plus suppressed equals events, and silence re-arms the alert") {
  RuleSet rules;
  rules.alert_cooldown = 60;
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> v(214, 232);
  std::uniform_int_distribution<int> gap(1, 90);
  DeviceRuleState st;
  MemoryOutbox out;
  std::map<AnomalyKind, UnixSeconds> last_event;
  UnixSeconds ts = 0;
  for (int n = 0; n < 3000; ++n) {
    ts += gap(rng);
    const auto r = record("n", ts, v(rng));
    const auto evs = evaluate(r, rules);
    const std::size_t before = out.snapshot().size();
    std::map<AnomalyKind, KindCounters> prev = st.counters;
    dispatch(evs, r, rules, st, out, "u");
    for (const auto& e : evs) {
      const bool quiet = !last_event.count(e.kind) || ts - last_event[e.kind] >= rules.alert_cooldown;
      if (quiet) CHECK(st.counters[e.kind].alerts == prev[e.kind].alerts + 1);
      last_event[e.kind] = ts;
    }
    CHECK(out.snapshot().size() >= before);
  }
  for (const auto& [kind, c] : st.counters) CHECK(c.alerts + c.suppressed == c.events);
}

TEST_CASE("sink failures are kept and retried on the next record") {
  const RuleSet rules;
  DeviceRuleState st;
  FlakySink sink;
  sink.up = false;
  const auto r1 = record("n", 10, 230.0);
  CHECK(dispatch(evaluate(r1, rules), r1, rules, st, sink, "u") == 0);
  CHECK(st.pending.size() == 1);
  sink.up = true;
  const auto r2 = record("n", 11, 222.0);
  CHECK(dispatch(evaluate(r2, rules), r2, rules, st, sink, "u") == 1);
  CHECK(st.pending.empty());
  REQUIRE(sink.got.size() == 1);
  CHECK(sink.got[0].event->kind == AnomalyKind::swell);
}

TEST_CASE("maintain notice examples") {
  const RuleSet rules;
  DeviceRuleState st;
  MemoryOutbox out;
  std::vector<TelemetryRecord> window;
  for (int k = 0; k < 300; ++k) window.push_back(record("n", 1000 + k));
  const auto n = maintain_notice(window, rules, st, out, "u", 1300);
  REQUIRE(n.has_value());
  CHECK(n->kind == NotificationKind::maintain);
  CHECK(n->body.find("maintain") != std::string::npos);

  window[150].v_rms = 218.0;
  CHECK_FALSE(maintain_notice(window, rules, st, out, "u", 1300).has_value());
  CHECK_FALSE(maintain_notice({}, rules, st, out, "u", 1300).has_value());
  CHECK(out.snapshot().size() == 1);
}

TEST_CASE("daily summary of a constant day") {
  VectorSource src;
  const std::int64_t day = 19723;  // 2024-01-01
  for (int k = 0; k < 100; ++k) src.recs.push_back(record("n", day * 86400 + k * 60));
  src.recs.push_back(record("n", (day + 1) * 86400, 300.0));  // next day, must not leak in
  DeviceRuleState st;
  MemoryOutbox out;
  const auto [s, note] = daily_summary("n", day, src, RuleSet{}, st, out, "u");
  CHECK_FALSE(s.empty);
  for (Metric m : kAllMetrics) {
    CHECK(s.of(m).count == 100);
    CHECK(s.of(m).min == doctest::Approx(s.of(m).mean).epsilon(1e-12));
    CHECK(s.of(m).max == doctest::Approx(s.of(m).mean).epsilon(1e-12));
  }
  CHECK(s.of(Metric::vrms).max == 222.0);
  for (const auto& [k, c] : s.event_counts) CHECK(c == 0);
  CHECK(note.kind == NotificationKind::daily_summary);
  CHECK(note.subject.find("2024-01-01") != std::string::npos);
}

TEST_CASE("daily summary with one swell and brute-force power stats") {
  VectorSource src;
  const std::int64_t day = 19723;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> p(1500, 1700);
  for (int k = 0; k < 300; ++k) {
    auto r = record("n", day * 86400 + 3600 + k, k == 60 ? 230.0 : 222.0);
    r.active_power = p(rng);
    src.recs.push_back(r);
  }
  DeviceRuleState st;
  MemoryOutbox out;
  const auto [s, note] = daily_summary("n", day, src, RuleSet{}, st, out, "u");
  CHECK(s.event_counts.at(AnomalyKind::swell) == 1);
  for (const auto& [k, c] : s.event_counts) {
    if (k != AnomalyKind::swell) CHECK(c == 0);
  }
  double lo = 1e300, hi = -1e300, acc = 0;
  for (const auto& r : src.recs) {
    lo = std::min(lo, r.active_power);
    hi = std::max(hi, r.active_power);
    acc += r.active_power;
  }
  CHECK(s.of(Metric::power).min == lo);
  CHECK(s.of(Metric::power).max == hi);
  CHECK(s.of(Metric::power).mean == doctest::Approx(acc / 300).epsilon(1e-14));
  CHECK(note.body.find("swell=1") != std::string::npos);
}

TEST_CASE("empty day summary says no data") {
  VectorSource src;
  DeviceRuleState st;
  MemoryOutbox out;
  const auto [s, note] = daily_summary("n", 19723, src, RuleSet{}, st, out, "u");
  CHECK(s.empty);
  CHECK(note.body.find("No data") != std::string::npos);
}

TEST_CASE("engine closes windows as time moves on") {
  VectorSource src;
  MemoryOutbox out;
  RuleSet rules;
  rules.maintain_window = 300;
  InsightEngine engine(rules, out, src);
  const UnixSeconds t0 = 19723LL * 86400;
  for (int k = 0; k < 300; ++k) {
    src.recs.push_back(record("n", t0 + k));
    engine.on_record(src.recs.back(), "u");
  }
  CHECK(out.snapshot().empty());
  engine.close_through("n", "u", t0 + 300);
  auto items = out.snapshot();
  REQUIRE(items.size() == 1);
  CHECK(items[0].kind == NotificationKind::maintain);
  CHECK(items[0].created_ts == t0 + 300);
  engine.close_through("n", "u", t0 + 86400);
  items = out.snapshot();
  REQUIRE(items.size() == 2);
  CHECK(items[1].kind == NotificationKind::daily_summary);
  engine.close_through("n", "u", t0 + 3 * 86400);
  CHECK(out.snapshot().size() == 2);
}

TEST_CASE("rule set validation") {
  RuleSet r;
  CHECK_NOTHROW(r.validate());
  r.sag_threshold = 230;
  CHECK_THROWS_AS(r.validate(), ConfigError);
  r = RuleSet{};
  r.temp_band = {30, 20};
  CHECK_THROWS_AS(r.validate(), ConfigError);
  r = RuleSet{};
  r.alert_cooldown = -1;
  CHECK_THROWS_AS(r.validate(), ConfigError);
  r = RuleSet{};
  r.maintain_window = 0;
  CHECK_THROWS_AS(r.validate(), ConfigError);
}

TEST_CASE("every anomaly kind has a tip and a name") {
  const RuleSet r;
  for (AnomalyKind k : kAllAnomalyKinds) {
    CHECK_FALSE(r.advice(k).empty());
    CHECK(parse_anomaly_kind(to_string(k)) == k);
  }
}

TEST_CASE("outbox lines carry exactly the documented keys") {
  Notification n;
  n.kind = NotificationKind::alert;
  n.device_id = "node-1";
  n.created_ts = 5;
  n.subject = "s";
  n.body = "b";
  const std::string line = encode_notification_line(n);
  CHECK(line.find('\n') == std::string::npos);
  const Notification back = decode_notification_line(line);
  CHECK(back.kind == n.kind);
  CHECK(back.device_id == n.device_id);
  CHECK(back.created_ts == n.created_ts);
  CHECK(back.subject == n.subject);
  CHECK(back.body == n.body);
  for (const char* key : {"\"kind\"", "\"device_id\"", "\"ts\"", "\"subject\"", "\"body\""}) {
    CHECK(line.find(key) != std::string::npos);
  }
}

TEST_CASE("file outbox persists and lists by device and time") {
  testing::TempDir dir("outbox");
  const auto path = dir / "outbox.jsonl";
  {
    FileOutbox box(path);
    for (int k = 0; k < 5; ++k) {
      Notification n;
      n.device_id = k % 2 ? "a" : "b";
      n.created_ts = 100 - k;
      n.subject = "s" + std::to_string(k);
      box.append(n);
    }
    CHECK(box.size() == 5);
  }
  FileOutbox again(path);
  CHECK(again.size() == 5);
  const auto a = again.list("a", 0, 1000);
  REQUIRE(a.size() == 2);
  CHECK(a[0].created_ts < a[1].created_ts);
  CHECK(again.list("b", 97, 99).size() == 1);
}
