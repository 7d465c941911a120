#include "ieqmon/http_api.hpp"

#include <httplib.h>

#include <charconv>
#include <json.hpp>
#include <limits>
#include <optional>

#include "ieqmon/error.hpp"

namespace ieqmon {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& error, const std::string& detail = "") {
  json body{{"ok", false}, {"error", error}};
  if (!detail.empty()) body["field"] = detail;
  send_json(res, status, body);
}

std::string bearer_token(const httplib::Request& req) {
  const std::string header = req.get_header_value("Authorization");
  constexpr std::string_view prefix = "Bearer ";
  if (header.size() <= prefix.size() || header.compare(0, prefix.size(), prefix) != 0) {
    throw AuthError("missing bearer token");
  }
  return header.substr(prefix.size());
}

UnixSeconds time_param(const httplib::Request& req, const char* name, UnixSeconds fallback) {
  if (!req.has_param(name)) return fallback;
  const std::string text = req.get_param_value(name);
  UnixSeconds value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ValidationError(name, std::string("parameter '") + name + "' must be integer unix seconds");
  }
  return value;
}

std::string required_param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) throw ValidationError(name, std::string("missing parameter '") + name + "'");
  return req.get_param_value(name);
}

json band_json(const Band& b) { return json::array({b.min, b.max}); }

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const AuthError& e) {
    send_error(res, 401, e.what());
  } catch (const ValidationError& e) {
    send_error(res, 400, e.what(), e.field());
  }
}

}  // namespace

struct HttpApi::Impl {
  TelemetryService& service;
  httplib::Server server;

  explicit Impl(TelemetryService& s) : service(s) {
    server.set_tcp_nodelay(true);
    routes();
  }

  void routes() {
    server.Get("/api/v1/health", [](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, json{{"ok", true}});
    });

    server.Post("/api/v1/telemetry", [this](const httplib::Request& req, httplib::Response& res) {
      const IngestResult r = service.ingest(req.body);
      switch (r.status) {
        case IngestStatus::stored: send_json(res, 200, json{{"ok", true}}); break;
        case IngestStatus::duplicate: send_error(res, 409, "duplicate"); break;
        case IngestStatus::invalid: send_error(res, 400, "validation", r.detail); break;
        case IngestStatus::unauthorized: send_error(res, 401, "unauthorized"); break;
      }
    });

    server.Post("/api/v1/login", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object()) throw ValidationError("body", "body is not a JSON object");
        for (const char* key : {"username", "password"}) {
          if (!body.contains(key) || !body[key].is_string()) {
            throw ValidationError(key, std::string("field '") + key + "' must be a string");
          }
        }
        const SessionToken t =
            service.authenticate(body["username"].get<std::string>(), body["password"].get<std::string>());
        send_json(res, 200, json{{"token", t.token}, {"expires", t.expires}});
      });
    });

    server.Get("/api/v1/series", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string token = bearer_token(req);
        const std::string device = required_param(req, "device");
        const std::string metric = required_param(req, "metric");
        const auto points =
            service.query_series(token, device, metric, time_param(req, "from", std::numeric_limits<UnixSeconds>::min()),
                                 time_param(req, "to", std::numeric_limits<UnixSeconds>::max()));
        json arr = json::array();
        for (const auto& [ts, value] : points) arr.push_back(json::array({ts, value}));
        send_json(res, 200, json{{"points", std::move(arr)}});
      });
    });

    server.Get("/api/v1/notifications", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string token = bearer_token(req);
        const std::string device = required_param(req, "device");
        const auto items = service.list_notifications(
            token, device, time_param(req, "from", std::numeric_limits<UnixSeconds>::min()),
            time_param(req, "to", std::numeric_limits<UnixSeconds>::max()));
        json arr = json::array();
        for (const Notification& n : items) arr.push_back(json::parse(encode_notification_line(n)));
        send_json(res, 200, json{{"notifications", std::move(arr)}});
      });
    });

    server.Get("/api/v1/rules", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        service.auth().user_for(bearer_token(req));
        const RuleSet& r = service.rules();
        send_json(res, 200,
                  json{{"swell_threshold", r.swell_threshold},
                       {"sag_threshold", r.sag_threshold},
                       {"temp_band", band_json(r.temp_band)},
                       {"humidity_band", band_json(r.humidity_band)},
                       {"co2_max", r.co2_max},
                       {"alert_cooldown", r.alert_cooldown},
                       {"summary_time", r.summary_time},
                       {"maintain_window", r.maintain_window}});
      });
    });

    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      std::string what = "internal error";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        what = e.what();
      } catch (...) {
      }
      send_error(res, 500, what);
    });
  }
};

HttpApi::HttpApi(TelemetryService& service) : impl_(std::make_unique<Impl>(service)) {}

HttpApi::~HttpApi() { stop(); }

int HttpApi::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound <= 0) throw ConfigError("cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw ConfigError("cannot bind " + host + ":" + std::to_string(port) + " (address in use?)");
  }
  return port;
}

void HttpApi::serve() { impl_->server.listen_after_bind(); }

void HttpApi::stop() {
  if (impl_) impl_->server.stop();
}

void HttpApi::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace ieqmon
