#pragma once

// Ground-truth mains voltage and appliance current synthesis.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ieqmon/time.hpp"

namespace ieqmon {

struct WaveformSpec {
  double mains_frequency = 50.0;       // Hz
  double nominal_rms_voltage = 223.0;  // V
  double noise_sigma = 0.0;            // V, std-dev of additive sample noise
  double synthesis_rate = 2000.0;      // samples per second
  double initial_phase = 0.0;          // rad

  /// Throws ConfigError naming the first bad field.
  void validate() const;
};

/// Half-open time interval [start, end) in seconds from scenario start.
struct Interval {
  double start = 0.0;
  double end = 0.0;

  bool contains(double t) const { return t >= start && t < end; }
};

struct LoadProfile {
  std::string appliance_name;
  double rms_current = 0.0;  // A
  double power_factor = 1.0;
  std::vector<Interval> on_intervals;

  static LoadProfile always_on(std::string name, double rms_current, double power_factor = 1.0);

  void validate() const;
  bool is_on(double t) const;
};

enum class GridEventKind { swell, sag };

std::string to_string(GridEventKind kind);

struct GridEvent {
  GridEventKind kind = GridEventKind::swell;
  double start = 0.0;     // s from scenario start
  double duration = 0.0;  // s
  double magnitude_factor = 1.0;

  void validate() const;
  double end() const { return start + duration; }
};

/// Checks every event and rejects overlapping events with different factors.
void validate_events(const std::vector<GridEvent>& events);

/// RMS multiplier in force at time t (1.0 when no event is active).
double event_factor_at(const std::vector<GridEvent>& events, double t);

struct TimeWindow {
  double start = 0.0;     // s from scenario start
  double duration = 1.0;  // s
};

/// Exactly round(duration * rate).
std::size_t sample_count(const TimeWindow& window, double rate);

/// Time-aligned instantaneous voltage/current streams.
struct AnalogPair {
  UnixSeconds start_time = 0;
  double rate = 0.0;
  std::vector<double> voltage_samples;
  std::vector<double> current_samples;
};

/// A*sin(2*pi*f*t + phase) + noise with A = sqrt(2) * nominal * active event factor.
/// Noise is seeded per (seed, first sample index) so adjacent windows draw independent
/// but reproducible streams.
std::vector<double> synth_voltage(const WaveformSpec& spec, const std::vector<GridEvent>& events,
                                  const TimeWindow& window, std::uint64_t seed = 0);

/// Sinusoid of the load's RMS lagging the voltage by acos(power_factor); zero when off.
std::vector<double> synth_current(const LoadProfile& load, const WaveformSpec& spec,
                                  const TimeWindow& window);

}  // namespace ieqmon
