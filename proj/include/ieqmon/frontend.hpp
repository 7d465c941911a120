#pragma once

// Numerical model of the non-invasive sensing chain: CT + burden resistor,
// AC-AC adapter + divider, bias network and ADC.

#include <cstdint>
#include <vector>

#include "ieqmon/kernels.hpp"
#include "ieqmon/waveform.hpp"

namespace ieqmon {

using AdcCount = kernels::Count;

struct CtSensor {
  int turns = 2000;                   // secondary turns, primary is one turn
  double max_primary_current = 10.0;  // A RMS
  double burden_resistance = 0.0;     // ohm

  void validate() const;
};

struct VoltageTap {
  double adapter_gain = 9.0 / 230.0;  // adapter output RMS / mains RMS
  double divider_ratio = 0.12;

  void validate() const;
  double gain() const { return adapter_gain * divider_ratio; }
};

struct BiasNetwork {
  double bias_volts = 1.65;
  double rail_volts = 3.3;

  void validate() const;
};

struct AdcModel {
  int resolution_bits = 12;
  double reference_volts = 3.3;  // AREF

  static constexpr int kMaxBits = 52;  // keeps every count exactly representable as a double

  void validate() const;
  AdcCount max_count() const { return (AdcCount{1} << resolution_bits) - 1; }
  double volts_per_count() const { return reference_volts / static_cast<double>(max_count()); }
};

/// Burden resistor sizing: (AREF * turns) / (2 * sqrt(2) * max primary RMS current).
/// Throws DomainError on any non-positive input.
double burden_resistor(double aref, double turns, double max_primary_current);

/// Secondary voltage across the burden for a given primary current.
double ct_transduce(double primary_current, const CtSensor& sensor);

/// Mains instantaneous voltage after the adapter and divider (sign preserved).
double tap_voltage(double mains_instantaneous, const VoltageTap& tap);

struct Conditioned {
  double volts = 0.0;
  bool saturated = false;
};

/// Adds the bias and clamps to [0, rail]; reports whether clamping happened.
Conditioned condition_and_bias(double signal, const BiasNetwork& bias);

/// round-half-up(volts / AREF * (2^bits - 1)). Throws ContractViolation outside [0, AREF].
AdcCount adc_sample(double volts, const AdcModel& adc);

/// Complete front-end configuration shared by the current and voltage channels.
struct FrontEndConfig {
  CtSensor ct{2000, 10.0, 233.345};
  VoltageTap tap{};
  BiasNetwork bias{};
  AdcModel adc{};
  /// Electrical noise on the current channel, expressed in primary amperes.
  double current_noise_sigma = 0.005;

  /// Defaults with the burden computed from the CT rating and AREF.
  static FrontEndConfig defaults();

  void validate() const;
  kernels::QuantizerParams quantizer() const;
};

/// One acquisition window as the firmware sees it.
struct SampleWindow {
  std::vector<AdcCount> voltage_counts;
  std::vector<AdcCount> current_counts;
  double rate = 0.0;
  bool saturation_seen = false;

  std::size_t sample_count() const { return voltage_counts.size(); }
  /// Throws ContractViolation if lengths differ, fewer than 2 samples or rate <= 0.
  void validate() const;
};

/// Runs a ground-truth pair through the conditioning chain and the ADC.
/// The current-channel noise stream is derived from `seed` and the window start.
SampleWindow digitize(const AnalogPair& truth, const FrontEndConfig& fe, std::uint64_t seed = 0);

}  // namespace ieqmon
