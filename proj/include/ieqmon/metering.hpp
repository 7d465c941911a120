#pragma once

// Measurement mathematics: count-to-unit inversion, RMS, active power and
// the percent-error metric used by the validation harness.

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ieqmon/frontend.hpp"
#include "ieqmon/time.hpp"

namespace ieqmon {

struct CalibrationSet {
  double current_scale = 0.0;  // primary A per burden volt (turns / burden)
  double voltage_scale = 0.0;  // mains V per ADC-input volt (1 / (gain * ratio))
  /// Zero-signal count. When unset, derived from the bias network.
  std::optional<double> bias_counts_estimate;

  /// Exact inverse of the given front end.
  static CalibrationSet from_frontend(const FrontEndConfig& fe);

  void validate() const;
};

struct MeterReading {
  UnixSeconds timestamp = 0;
  double v_rms = 0.0;
  double i_rms = 0.0;
  double active_power = 0.0;
  bool suspect = false;
};

struct PhysicalSignals {
  std::vector<double> volts;
  std::vector<double> amperes;
};

/// Maps each count to ((c - bias_counts) * AREF / (2^bits - 1)) * scale.
PhysicalSignals reconstruct(const SampleWindow& window, const AdcModel& adc, const BiasNetwork& bias,
                            const CalibrationSet& cal);

/// sqrt(sum(x^2) / n). Throws DomainError on empty input.
double rms(std::span<const double> samples);

/// (1/N) * sum(v[j] * i[j]). Throws DomainError on empty or mismatched input.
double active_power(std::span<const double> v, std::span<const double> i);

/// reconstruct -> per-window mean removal -> rms, rms, active_power.
MeterReading compute_reading(const SampleWindow& window, const AdcModel& adc, const BiasNetwork& bias,
                             const CalibrationSet& cal, UnixSeconds timestamp);

/// |measured - reference| / |reference| * 100. Throws DomainError for a zero reference.
double percent_error(double measured, double reference);

/// Decimal round-half-up to `places` digits, tolerant of binary representation error.
double round_half_up(double value, int places);

}  // namespace ieqmon
