#pragma once

#include <memory>

#include "ieqmon/auth.hpp"
#include "ieqmon/service.hpp"
#include "support.hpp"

namespace testing {

/// A service over a scratch directory with one user ("demo"/"pw") owning node-1,
/// plus "eve"/"pw2" owning node-2. The session clock is controllable.
struct ServiceFixture {
  TempDir dir{"svc"};
  ieqmon::UnixSeconds now = 1704067200;
  ieqmon::AuthRegistry auth{[this] { return now; }};
  std::unique_ptr<ieqmon::TelemetryService> service;

  explicit ServiceFixture(ieqmon::RuleSet rules = {}) {
    static const std::string demo_hash = ieqmon::hash_password("pw");
    static const std::string eve_hash = ieqmon::hash_password("pw2");
    auth.add_user("demo", demo_hash);
    auth.add_user("eve", eve_hash);
    auth.add_device({"node-1", "key-1", "demo"});
    auth.add_device({"node-2", "key-2", "eve"});
    open(std::move(rules));
  }

  void open(ieqmon::RuleSet rules = {}) {
    service.reset();
    service = std::make_unique<ieqmon::TelemetryService>(ieqmon::ServiceOptions{dir.path(), std::move(rules), false},
                                                         auth);
  }

  std::string token(const std::string& user = "demo", const std::string& pw = "pw") {
    return service->authenticate(user, pw).token;
  }
};

}  // namespace testing

#include <thread>

#include "ieqmon/http_api.hpp"

namespace testing {

/// ServiceFixture behind a live HTTP listener on a free loopback port.
struct HttpFixture : ServiceFixture {
  ieqmon::HttpApi api{*service};
  int port = api.bind("127.0.0.1", 0);
  std::thread thread{[this] { api.serve(); }};

  HttpFixture() { api.wait_until_ready(); }
  ~HttpFixture() {
    api.stop();
    thread.join();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port); }
};

}  // namespace testing
