#pragma once

// Behavioral models of the temperature/humidity sensor, the analog CO2 sensor
// and a slowly drifting indoor environment for them to observe.

#include <cstdint>

#include "ieqmon/frontend.hpp"
#include "ieqmon/time.hpp"

namespace ieqmon {

struct IeqState {
  double temperature = 24.4;  // degC
  double humidity = 55.6;     // %RH
  double co2 = 566.0;         // ppm

  /// Clamps into the physical bounds: temperature [-40, 80], humidity [0, 99.9], co2 >= 0.
  IeqState clamped() const;
};

struct Band {
  double min = 0.0;
  double max = 0.0;
};

/// Per-field Ornstein-Uhlenbeck style drift, clamped into a band.
struct FieldDrift {
  double target = 0.0;
  double reversion_rate = 0.0;  // 1/s
  double sigma = 0.0;           // units per sqrt(s)
  Band bounds{-1e9, 1e9};
};

struct DriftParams {
  FieldDrift temperature;
  FieldDrift humidity;
  FieldDrift co2;

  /// Everything pinned at `s`: zero sigma, zero reversion.
  static DriftParams frozen(const IeqState& s);
};

IeqState step_environment(const IeqState& state, double dt, const DriftParams& drift, std::uint64_t seed);

/// Log-linear ppm <-> volts mapping: v = baseline_volts + volts_per_decade * log10(ppm / baseline_ppm).
/// A dead output (0 V) reads as 0 ppm.
struct Co2Curve {
  double baseline_ppm = 400.0;
  double baseline_volts = 0.5;
  double volts_per_decade = 1.5;
  double offset_ppm = 0.0;  // systematic sensor bias added to the truth

  double to_volts(double ppm) const;
  double to_ppm(double volts) const;
};

struct IeqSensorModel {
  double temp_resolution = 0.1;
  double humid_resolution = 0.1;
  double temp_noise_sigma = 0.0;
  double humid_noise_sigma = 0.0;
  double co2_noise_sigma = 0.0;
  Co2Curve co2_curve{};
  AdcModel adc{};

  void validate() const;
};

struct IeqReading {
  UnixSeconds timestamp = 0;
  double temperature = 0.0;
  double humidity = 0.0;
  std::int64_t co2 = 0;
};

struct TempHumidity {
  double temperature = 0.0;
  double humidity = 0.0;
};

/// Truth + noise, quantized round-half-up to the resolution grid and clamped to
/// the sensor range (-40..80 degC, 0..99.9 %RH).
TempHumidity read_temp_humidity(const IeqState& state, const IeqSensorModel& model, std::uint64_t seed);

/// Truth + offset + noise through the analog curve and the ADC, back to integer ppm.
std::int64_t read_co2(const IeqState& state, const IeqSensorModel& model, std::uint64_t seed);

/// Round-half-up onto the grid k * resolution.
double quantize_to(double value, double resolution);

}  // namespace ieqmon
