#pragma once

// Client for the service's HTTP API, shared by the device transport and the CLI.

#include <memory>
#include <string>
#include <vector>

#include "ieqmon/auth.hpp"
#include "ieqmon/insight.hpp"
#include "ieqmon/store.hpp"

namespace ieqmon {

/// HTTP status plus response body; status 0 means the request never completed.
struct HttpReply {
  int status = 0;
  std::string body;
};

class ApiClient {
 public:
  /// `endpoint` is scheme://host:port with an optional path prefix.
  explicit ApiClient(const std::string& endpoint, double timeout_seconds = 2.0);
  ~ApiClient();

  bool health();
  HttpReply post_telemetry(const std::string& body);

  /// Throws AuthError on 401 and std::runtime_error on transport/other failures.
  SessionToken login(const std::string& username, const std::string& password);
  std::vector<SeriesPoint> series(const std::string& token, const std::string& device_id, const std::string& metric,
                                  UnixSeconds from, UnixSeconds to);
  std::vector<Notification> notifications(const std::string& token, const std::string& device_id,
                                          UnixSeconds from, UnixSeconds to);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ieqmon
