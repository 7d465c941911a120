#include "ieqmon/http_client.hpp"

#include <httplib.h>

#include <json.hpp>

#include "ieqmon/error.hpp"
#include "ieqmon/outbox.hpp"

namespace ieqmon {

using nlohmann::json;

namespace {

struct Endpoint {
  std::string origin;  // scheme://host:port
  std::string prefix;  // path without trailing slash
};

Endpoint split_endpoint(const std::string& url) {
  const std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError("endpoint must look like http://host:port, got '" + url + "'");
  const std::size_t path = url.find('/', scheme + 3);
  Endpoint e{url.substr(0, path), path == std::string::npos ? "" : url.substr(path)};
  while (!e.prefix.empty() && e.prefix.back() == '/') e.prefix.pop_back();
  return e;
}

std::string query_string(std::initializer_list<std::pair<const char*, std::string>> params) {
  std::string q;
  for (const auto& [k, v] : params) {
    q += q.empty() ? '?' : '&';
    q += k;
    q += '=';
    q += httplib::detail::encode_query_param(v);
  }
  return q;
}

}  // namespace

struct ApiClient::Impl {
  Endpoint endpoint;
  httplib::Client client;

  Impl(const std::string& url, double timeout)
      : endpoint(split_endpoint(url)), client(endpoint.origin) {
    const auto usec = static_cast<time_t>(timeout * 1e6);
    client.set_connection_timeout(usec / 1000000, usec % 1000000);
    client.set_read_timeout(usec / 1000000, usec % 1000000);
    client.set_write_timeout(usec / 1000000, usec % 1000000);
    client.set_keep_alive(true);
    client.set_tcp_nodelay(true);
  }

  std::string path(const std::string& p) const { return endpoint.prefix + p; }

  json get_json(const std::string& p, const std::string& token) {
    httplib::Headers headers{{"Authorization", "Bearer " + token}};
    auto res = client.Get(path(p), headers);
    if (!res) throw std::runtime_error("request failed: " + httplib::to_string(res.error()));
    if (res->status == 401) throw AuthError("unauthorized (session expired?)");
    if (res->status != 200) throw std::runtime_error("HTTP " + std::to_string(res->status) + ": " + res->body);
    return json::parse(res->body);
  }
};

ApiClient::ApiClient(const std::string& endpoint, double timeout_seconds)
    : impl_(std::make_unique<Impl>(endpoint, timeout_seconds)) {}

ApiClient::~ApiClient() = default;

bool ApiClient::health() {
  auto res = impl_->client.Get(impl_->path("/api/v1/health"));
  return res && res->status == 200;
}

HttpReply ApiClient::post_telemetry(const std::string& body) {
  auto res = impl_->client.Post(impl_->path("/api/v1/telemetry"), body, "application/json");
  if (!res) return {0, httplib::to_string(res.error())};
  return {res->status, res->body};
}

SessionToken ApiClient::login(const std::string& username, const std::string& password) {
  const json body{{"username", username}, {"password", password}};
  auto res = impl_->client.Post(impl_->path("/api/v1/login"), body.dump(), "application/json");
  if (!res) throw std::runtime_error("login request failed: " + httplib::to_string(res.error()));
  if (res->status == 401) throw AuthError("invalid credentials");
  if (res->status != 200) throw std::runtime_error("login failed with HTTP " + std::to_string(res->status));
  const json reply = json::parse(res->body);
  return {reply.at("token").get<std::string>(), username, reply.at("expires").get<UnixSeconds>()};
}

std::vector<SeriesPoint> ApiClient::series(const std::string& token, const std::string& device_id,
                                           const std::string& metric, UnixSeconds from, UnixSeconds to) {
  const json reply = impl_->get_json(
      "/api/v1/series" + query_string({{"device", device_id},
                                       {"metric", metric},
                                       {"from", std::to_string(from)},
                                       {"to", std::to_string(to)}}),
      token);
  std::vector<SeriesPoint> out;
  for (const json& p : reply.at("points")) out.emplace_back(p.at(0).get<UnixSeconds>(), p.at(1).get<double>());
  return out;
}

std::vector<Notification> ApiClient::notifications(const std::string& token, const std::string& device_id,
                                                   UnixSeconds from, UnixSeconds to) {
  const json reply = impl_->get_json(
      "/api/v1/notifications" +
          query_string({{"device", device_id}, {"from", std::to_string(from)}, {"to", std::to_string(to)}}),
      token);
  std::vector<Notification> out;
  for (const json& n : reply.at("notifications")) out.push_back(decode_notification_line(n.dump()));
  return out;
}

}  // namespace ieqmon
