// ieqmon: run simulated devices, the telemetry service, accuracy validation and series export.
//
// Exit codes: 0 ok, 1 check failed (tolerance, rejected records), 2 usage or
// configuration error, 3 service unreachable.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include "ieqmon/error.hpp"
#include "ieqmon/http_api.hpp"
#include "ieqmon/http_client.hpp"
#include "ieqmon/service.hpp"
#include "ieqmon/simulation.hpp"
#include "ieqmon/transports.hpp"

namespace fs = std::filesystem;
using namespace ieqmon;

namespace {

constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitUnreachable = 3;
constexpr UnixSeconds kFarFuture = 253402300799;  // 9999-12-31T23:59:59Z

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

// Forwards to one shared transport so several devices can share a log file.
class SharedTransport : public Transport {
 public:
  explicit SharedTransport(std::shared_ptr<Transport> inner) : inner_(std::move(inner)) {}
  bool connect(UnixSeconds now) override { return inner_->connect(now); }
  Delivery deliver(const TelemetryRecord& r, const std::string& key, UnixSeconds now) override {
    return inner_->deliver(r, key, now);
  }

 private:
  std::shared_ptr<Transport> inner_;
};

// Unix seconds, YYYY-MM-DD, or YYYY-MM-DDTHH:MM:SSZ. Dates mean the start of
// the day for --from and the last second of the day for --to.
UnixSeconds parse_time_arg(const std::string& text, bool end_of_day) {
  if (text.empty()) throw ConfigError("empty time value");
  if (text.find_first_not_of("-0123456789") == std::string::npos && text.find('-', 1) == std::string::npos) {
    return std::stoll(text);
  }
  if (text.size() == 10) {
    const std::int64_t day = parse_date(text);
    return day * kSecondsPerDay + (end_of_day ? kSecondsPerDay - 1 : 0);
  }
  if (text.size() == 20 && text[10] == 'T' && text[19] == 'Z') {
    const std::int64_t day = parse_date(text.substr(0, 10));
    int h = 0, m = 0, s = 0;
    if (std::sscanf(text.c_str() + 11, "%2d:%2d:%2d", &h, &m, &s) != 3) throw ConfigError("bad time '" + text + "'");
    return day * kSecondsPerDay + h * 3600 + m * 60 + s;
  }
  throw ConfigError("bad time '" + text + "' (use unix seconds, YYYY-MM-DD or YYYY-MM-DDTHH:MM:SSZ)");
}

struct DeviceRunArgs {
  std::string scenario;
  std::string endpoint = "http://127.0.0.1:8080";
  bool offline = false;
  std::string offline_log = "ieqmon-offline.jsonl";
  std::string mode = "fast";
  std::optional<std::uint64_t> seed;
  std::string out;
};

int cmd_device_run(const DeviceRunArgs& a) {
  Scenario sc = load_scenario(a.scenario);
  if (a.seed) sc.seed = *a.seed;
  RunOptions opts;
  opts.mode = a.mode == "realtime" ? RunMode::realtime : RunMode::fast;
  opts.offline = a.offline;

  TransportFactory factory;
  if (a.offline) {
    auto log = std::make_shared<OfflineLogTransport>(a.offline_log);
    factory = [log](const DeviceConfig&) { return std::make_unique<SharedTransport>(log); };
  } else {
    ApiClient probe(a.endpoint);
    if (!probe.health()) {
      std::cerr << "error: service at " << a.endpoint << " is unreachable (use --offline to log locally)\n";
      return kExitUnreachable;
    }
    factory = [endpoint = a.endpoint](const DeviceConfig&) { return std::make_unique<HttpTransport>(endpoint); };
  }

  const RunManifest manifest = run_devices(sc, factory, opts);
  const std::string text = manifest.to_json().dump(2) + "\n";
  if (!a.out.empty()) write_text(a.out, text);
  std::cout << text;

  std::uint64_t rejected = 0;
  for (const auto& d : manifest.devices) rejected += d.counters.rejected;
  if (rejected > 0) {
    std::cerr << "error: the service rejected " << rejected << " records (check api keys and device ids)\n";
    return kExitFailed;
  }
  return 0;
}

struct ServerArgs {
  std::string scenario;
  std::string data = "ieqmon-data";
  std::string host = "127.0.0.1";
  int port = 8080;
  bool sync = false;
  bool finalize_on_exit = false;
};

int cmd_server(const ServerArgs& a) {
  Scenario sc = load_scenario(a.scenario);
  AuthRegistry auth;
  provision(auth, sc);
  ServiceOptions so;
  so.data_dir = a.data;
  so.rules = sc.rules;
  so.sync_writes = a.sync;
  std::unique_ptr<TelemetryService> service;
  try {
    service = std::make_unique<TelemetryService>(so, auth);
  } catch (const StoreLockedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  HttpApi api(*service);
  const int port = api.bind(a.host, a.port);

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::thread server([&] { api.serve(); });
  api.wait_until_ready();
  std::cout << "listening on http://" << a.host << ":" << port << std::endl;
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  api.stop();
  server.join();
  if (a.finalize_on_exit) service->finalize(system_now());
  std::cout << "stopped" << std::endl;
  return 0;
}

struct ValidateArgs {
  std::string scenario;
  std::optional<double> tolerance;
  std::string out;
  bool ideal = false;
};

int cmd_validate(const ValidateArgs& a) {
  Scenario sc = load_scenario(a.scenario);
  if (!sc.validation) throw ConfigError("scenario has no validation section (reference values are required)");
  if (a.tolerance) sc.validation->tolerance = *a.tolerance;
  const ValidationReport report = run_validation(sc, a.ideal);
  std::cout << report.table();
  if (!a.out.empty()) write_text(a.out, report.csv());
  return report.passed() ? 0 : kExitFailed;
}

struct ReportArgs {
  std::string endpoint = "http://127.0.0.1:8080";
  std::string device;
  std::string metric = "all";
  std::string from;
  std::string to;
  std::string user;
  std::string password;
  std::string out;
};

std::string series_csv(const std::vector<SeriesPoint>& points) {
  std::string out = "ts,value\n";
  for (const auto& [ts, v] : points) out += fmt::format("{},{}\n", ts, v);
  return out;
}

int cmd_report(const ReportArgs& a) {
  std::vector<Metric> metrics;
  if (a.metric == "all") {
    metrics.assign(kAllMetrics.begin(), kAllMetrics.end());
  } else if (auto m = parse_metric(a.metric)) {
    metrics.push_back(*m);
  } else {
    std::cerr << "error: unknown metric '" << a.metric << "' (vrms, irms, power, temp, humidity, co2 or all)\n";
    return kExitUsage;
  }
  const UnixSeconds from = a.from.empty() ? 0 : parse_time_arg(a.from, false);
  const UnixSeconds to = a.to.empty() ? kFarFuture : parse_time_arg(a.to, true);
  if (from > to) throw ConfigError("--from must not be after --to");

  ApiClient client(a.endpoint);
  if (!client.health()) {
    std::cerr << "error: service at " << a.endpoint << " is unreachable\n";
    return kExitUnreachable;
  }
  const SessionToken session = client.login(a.user, a.password);

  const bool many = metrics.size() > 1;
  if (many && !a.out.empty() && a.out != "-") fs::create_directories(a.out);
  for (Metric m : metrics) {
    const std::string name(to_string(m));
    const auto points = client.series(session.token, a.device, name, from, to);
    if (points.empty()) std::cerr << "warning: no " << name << " data for " << a.device << " in range\n";
    std::string target = a.out;
    if (many && !a.out.empty() && a.out != "-") target = (fs::path(a.out) / (a.device + "_" + name + ".csv")).string();
    if (many && (a.out.empty() || a.out == "-")) std::cout << "# " << name << "\n";
    write_text(target, series_csv(points));
    if (!target.empty() && target != "-") std::cerr << name << ": " << points.size() << " rows -> " << target << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy and indoor-environment monitoring twin"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "ieqmon 1.0.0");

  DeviceRunArgs dr;
  auto* device_run = app.add_subcommand("device-run", "Run the scenario's simulated devices against a service");
  device_run->add_option("--scenario", dr.scenario, "Scenario YAML")->required()->envname("IEQMON_SCENARIO");
  device_run->add_option("--endpoint", dr.endpoint, "Service base URL")->envname("IEQMON_ENDPOINT");
  device_run->add_flag("--offline", dr.offline, "Write records to a local log instead of posting")
      ->envname("IEQMON_OFFLINE");
  device_run->add_option("--offline-log", dr.offline_log, "Local log for --offline")->envname("IEQMON_OFFLINE_LOG");
  device_run->add_option("--mode", dr.mode, "fast (simulated time) or realtime")
      ->check(CLI::IsMember({"fast", "realtime"}))
      ->envname("IEQMON_MODE");
  device_run->add_option("--seed", dr.seed, "Override the scenario seed")->envname("IEQMON_SEED");
  device_run->add_option("--out", dr.out, "Write the run manifest here")->envname("IEQMON_OUT");

  ServerArgs sa;
  auto* server = app.add_subcommand("server", "Run the telemetry service and HTTP API");
  server->add_option("--scenario,--config", sa.scenario, "Scenario YAML providing devices, users and rules")
      ->required()
      ->envname("IEQMON_SCENARIO");
  server->add_option("--data", sa.data, "Storage directory")->envname("IEQMON_DATA");
  server->add_option("--host", sa.host, "Listen address")->envname("IEQMON_HOST");
  server->add_option("--port", sa.port, "Listen port (0 picks a free one)")->envname("IEQMON_PORT");
  server->add_flag("--sync", sa.sync, "fdatasync every append")->envname("IEQMON_SYNC");
  server->add_flag("--finalize-on-exit", sa.finalize_on_exit,
                   "Emit maintain notices and daily summaries due at shutdown time")
      ->envname("IEQMON_FINALIZE_ON_EXIT");

  ValidateArgs va;
  auto* validate = app.add_subcommand("validate", "Compare measured values against the scenario's references");
  validate->add_option("--scenario", va.scenario, "Scenario YAML")->required()->envname("IEQMON_SCENARIO");
  validate->add_option("--tolerance", va.tolerance, "Allowed percent error")->envname("IEQMON_TOLERANCE");
  validate->add_option("--out", va.out, "Write the CSV report here")->envname("IEQMON_OUT");
  validate->add_flag("--ideal", va.ideal, "Noise-free, effectively infinite-resolution chain")
      ->envname("IEQMON_IDEAL");

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "Export stored series as CSV");
  report->add_option("--endpoint", ra.endpoint, "Service base URL")->envname("IEQMON_ENDPOINT");
  report->add_option("--device", ra.device, "Device id")->required()->envname("IEQMON_DEVICE");
  report->add_option("--metric", ra.metric, "vrms, irms, power, temp, humidity, co2 or all")
      ->envname("IEQMON_METRIC");
  report->add_option("--from", ra.from, "Start (unix s, YYYY-MM-DD or ISO timestamp)")->envname("IEQMON_FROM");
  report->add_option("--to", ra.to, "End, inclusive")->envname("IEQMON_TO");
  report->add_option("--user", ra.user, "Username")->required()->envname("IEQMON_USER");
  report->add_option("--password", ra.password, "Password")->required()->envname("IEQMON_PASSWORD");
  report->add_option("--out", ra.out, "CSV file (one metric) or directory (all); default stdout")
      ->envname("IEQMON_OUT");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*device_run) return cmd_device_run(dr);
    if (*server) return cmd_server(sa);
    if (*validate) return cmd_validate(va);
    if (*report) return cmd_report(ra);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const AuthError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailed;
  }
  return kExitUsage;
}
