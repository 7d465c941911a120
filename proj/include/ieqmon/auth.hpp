#pragma once

// Device API keys, user accounts and expiring session tokens.

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "ieqmon/time.hpp"

namespace ieqmon {

/// Uniform authentication/authorization failure (maps to HTTP 401).
class AuthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ApiCredential {
  std::string device_id;
  std::string api_key;
  std::string owner_user;
};

struct SessionToken {
  std::string token;
  std::string username;
  UnixSeconds expires = 0;
};

/// Argon2id verifier string (libsodium crypto_pwhash_str format).
std::string hash_password(const std::string& password);

/// Wall-clock seconds.
UnixSeconds system_now();

class AuthRegistry {
 public:
  using Clock = std::function<UnixSeconds()>;

  explicit AuthRegistry(Clock clock = system_now, std::int64_t session_ttl = kSecondsPerDay);

  /// Throws ConfigError for an empty key or a device id that is already registered.
  void add_device(const ApiCredential& cred);
  /// `verifier` must come from hash_password.
  void add_user(const std::string& username, const std::string& verifier);

  /// Constant-time comparison; false for unknown devices.
  bool check_api_key(const std::string& device_id, const std::string& api_key) const;
  std::optional<std::string> owner_of(const std::string& device_id) const;

  /// Fresh session token. Unknown user and wrong password fail identically.
  SessionToken authenticate(const std::string& username, const std::string& password);

  /// Username behind a live token; throws AuthError for unknown or expired tokens.
  std::string user_for(const std::string& token) const;

  /// Throws AuthError unless the token's user owns the device.
  void require_owner(const std::string& token, const std::string& device_id) const;

  std::int64_t session_ttl() const { return session_ttl_; }

 private:
  Clock clock_;
  std::int64_t session_ttl_;
  mutable std::mutex mu_;
  std::map<std::string, ApiCredential> devices_;
  std::map<std::string, std::string> users_;
  std::unordered_map<std::string, SessionToken> sessions_;
};

}  // namespace ieqmon
