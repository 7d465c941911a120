#pragma once

// HTTP/JSON front of the telemetry service.

#include <memory>
#include <string>

#include "ieqmon/service.hpp"

namespace ieqmon {

class HttpApi {
 public:
  explicit HttpApi(TelemetryService& service);
  ~HttpApi();

  HttpApi(const HttpApi&) = delete;
  HttpApi& operator=(const HttpApi&) = delete;

  /// Binds the listening socket; port 0 picks a free port. Returns the bound port.
  /// Throws ConfigError when the address is unavailable.
  int bind(const std::string& host, int port);

  /// Serves until stop() is called from another thread.
  void serve();
  void stop();
  /// Blocks until the server accepts connections.
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ieqmon
