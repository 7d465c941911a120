#pragma once

// Shared helpers for the unit tests: scratch directories, seeded generators
// and brute-force oracles written independently of the library.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ieqmon/telemetry.hpp"

namespace testing {

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("ieqmon-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(++counter));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline double brute_rms(const std::vector<double>& x) {
  long double acc = 0;
  for (double v : x) acc += static_cast<long double>(v) * v;
  return static_cast<double>(std::sqrt(acc / x.size()));
}

inline double brute_power(const std::vector<double>& v, const std::vector<double>& i) {
  long double acc = 0;
  for (std::size_t k = 0; k < v.size(); ++k) acc += static_cast<long double>(v[k]) * i[k];
  return static_cast<double>(acc / v.size());
}

/// Samples of a*sin(2*pi*f*t + phase) at `rate` for `n` samples.
inline std::vector<double> sine(double a, double f, double phase, double rate, std::size_t n) {
  std::vector<double> out(n);
  const long double two_pi = 6.283185307179586476925286766559L;
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = static_cast<double>(a * std::sin(two_pi * f * (static_cast<long double>(k) / rate) + phase));
  }
  return out;
}

inline double rel(double a, double b) { return std::fabs(a - b) / std::fabs(b); }

inline ieqmon::TelemetryRecord record(const std::string& device, std::int64_t ts, double vrms = 222.0) {
  ieqmon::TelemetryRecord r;
  r.device_id = device;
  r.ts = ts;
  r.v_rms = vrms;
  r.i_rms = 7.4;
  r.active_power = 1642.8;
  r.temperature = 24.4;
  r.humidity = 55.6;
  r.co2 = 566;
  return r;
}

}  // namespace testing
