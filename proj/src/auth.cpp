#include "ieqmon/auth.hpp"

#include <sodium.h>

#include <array>
#include <chrono>

#include "ieqmon/error.hpp"

namespace ieqmon {

namespace {

void ensure_sodium() {
  static const int rc = sodium_init();
  if (rc < 0) throw std::runtime_error("libsodium initialisation failed");
}

using Digest = std::array<unsigned char, crypto_generichash_BYTES>;

Digest digest(const std::string& s) {
  Digest d{};
  crypto_generichash(d.data(), d.size(), reinterpret_cast<const unsigned char*>(s.data()), s.size(), nullptr, 0);
  return d;
}

// Used when the username is unknown so the response time does not reveal it.
const std::string& dummy_verifier() {
  static const std::string v = hash_password("not-a-real-password");
  return v;
}

}  // namespace

std::string hash_password(const std::string& password) {
  ensure_sodium();
  char out[crypto_pwhash_STRBYTES];
  if (crypto_pwhash_str(out, password.data(), password.size(), crypto_pwhash_OPSLIMIT_INTERACTIVE,
                        crypto_pwhash_MEMLIMIT_INTERACTIVE) != 0) {
    throw std::runtime_error("password hashing ran out of memory");
  }
  return out;
}

UnixSeconds system_now() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

AuthRegistry::AuthRegistry(Clock clock, std::int64_t session_ttl)
    : clock_(std::move(clock)), session_ttl_(session_ttl) {
  ensure_sodium();
  if (session_ttl_ <= 0) throw ConfigError("session_ttl must be > 0");
}

void AuthRegistry::add_device(const ApiCredential& cred) {
  if (cred.api_key.empty()) throw ConfigError("device '" + cred.device_id + "': api_key must be non-empty");
  std::lock_guard lock(mu_);
  if (!devices_.emplace(cred.device_id, cred).second) {
    throw ConfigError("device '" + cred.device_id + "' registered twice");
  }
}

void AuthRegistry::add_user(const std::string& username, const std::string& verifier) {
  if (username.empty()) throw ConfigError("username must be non-empty");
  std::lock_guard lock(mu_);
  users_[username] = verifier;
}

bool AuthRegistry::check_api_key(const std::string& device_id, const std::string& api_key) const {
  std::string expected;
  {
    std::lock_guard lock(mu_);
    auto it = devices_.find(device_id);
    if (it == devices_.end()) return false;
    expected = it->second.api_key;
  }
  const Digest a = digest(expected);
  const Digest b = digest(api_key);
  return sodium_memcmp(a.data(), b.data(), a.size()) == 0;
}

std::optional<std::string> AuthRegistry::owner_of(const std::string& device_id) const {
  std::lock_guard lock(mu_);
  auto it = devices_.find(device_id);
  if (it == devices_.end()) return std::nullopt;
  return it->second.owner_user;
}

SessionToken AuthRegistry::authenticate(const std::string& username, const std::string& password) {
  std::string verifier;
  bool known = false;
  {
    std::lock_guard lock(mu_);
    auto it = users_.find(username);
    if (it != users_.end()) {
      verifier = it->second;
      known = true;
    }
  }
  if (!known) verifier = dummy_verifier();
  const bool ok = crypto_pwhash_str_verify(verifier.c_str(), password.data(), password.size()) == 0;
  if (!ok || !known) throw AuthError("invalid credentials");

  std::array<unsigned char, 32> raw{};
  randombytes_buf(raw.data(), raw.size());
  std::string hex(raw.size() * 2 + 1, '\0');
  sodium_bin2hex(hex.data(), hex.size(), raw.data(), raw.size());
  hex.pop_back();

  SessionToken t{hex, username, clock_() + session_ttl_};
  std::lock_guard lock(mu_);
  sessions_[t.token] = t;
  return t;
}

std::string AuthRegistry::user_for(const std::string& token) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(token);
  if (it == sessions_.end()) throw AuthError("unknown session");
  if (clock_() >= it->second.expires) throw AuthError("session expired, please log in again");
  return it->second.username;
}

void AuthRegistry::require_owner(const std::string& token, const std::string& device_id) const {
  const std::string user = user_for(token);
  const auto owner = owner_of(device_id);
  if (!owner || *owner != user) throw AuthError("not authorized for this device");
}

}  // namespace ieqmon
