#include "ieqmon/frontend.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "ieqmon/error.hpp"

namespace ieqmon {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void CtSensor::validate() const {
  require(turns >= 1, "ct.turns must be >= 1");
  require(std::isfinite(max_primary_current) && max_primary_current > 0,
          "ct.max_primary_current must be > 0");
  require(std::isfinite(burden_resistance) && burden_resistance > 0,
          "ct.burden_resistance must be > 0");
}

void VoltageTap::validate() const {
  require(std::isfinite(adapter_gain) && adapter_gain > 0, "tap.adapter_gain must be > 0");
  require(divider_ratio > 0 && divider_ratio <= 1, "tap.divider_ratio must be in (0, 1]");
}

void BiasNetwork::validate() const {
  require(std::isfinite(rail_volts) && bias_volts > 0 && bias_volts < rail_volts,
          "bias requires 0 < bias_volts < rail_volts");
}

void AdcModel::validate() const {
  require(resolution_bits >= 1 && resolution_bits <= kMaxBits, "adc.resolution_bits must be in [1, 52]");
  require(std::isfinite(reference_volts) && reference_volts > 0, "adc.reference_volts must be > 0");
}

double burden_resistor(double aref, double turns, double max_primary_current) {
  if (!(aref > 0) || !(turns > 0) || !(max_primary_current > 0)) {
    throw DomainError("burden_resistor: all inputs must be > 0");
  }
  return (aref * turns) / (2.0 * std::numbers::sqrt2 * max_primary_current);
}

double ct_transduce(double primary_current, const CtSensor& sensor) {
  return primary_current / static_cast<double>(sensor.turns) * sensor.burden_resistance;
}

double tap_voltage(double mains_instantaneous, const VoltageTap& tap) {
  return mains_instantaneous * tap.adapter_gain * tap.divider_ratio;
}

Conditioned condition_and_bias(double signal, const BiasNetwork& bias) {
  const double v = signal + bias.bias_volts;
  if (v < 0.0) return {0.0, true};
  if (v > bias.rail_volts) return {bias.rail_volts, true};
  return {v, false};
}

AdcCount adc_sample(double volts, const AdcModel& adc) {
  if (!(volts >= 0.0 && volts <= adc.reference_volts)) {
    throw ContractViolation("adc_sample: input " + std::to_string(volts) + " V outside [0, AREF]");
  }
  return kernels::quantize(volts, {0.0, adc.reference_volts, adc.reference_volts, adc.max_count()});
}

FrontEndConfig FrontEndConfig::defaults() {
  FrontEndConfig fe;
  fe.ct.burden_resistance =
      burden_resistor(fe.adc.reference_volts, fe.ct.turns, fe.ct.max_primary_current);
  return fe;
}

void FrontEndConfig::validate() const {
  ct.validate();
  tap.validate();
  bias.validate();
  adc.validate();
  require(std::isfinite(current_noise_sigma) && current_noise_sigma >= 0,
          "current_noise_sigma must be >= 0");
}

kernels::QuantizerParams FrontEndConfig::quantizer() const {
  return {bias.bias_volts, bias.rail_volts, adc.reference_volts, adc.max_count()};
}

void SampleWindow::validate() const {
  if (voltage_counts.size() != current_counts.size()) {
    throw ContractViolation("sample window: channel lengths differ");
  }
  if (voltage_counts.size() < 2) throw ContractViolation("sample window: need at least 2 samples");
  if (!(rate > 0)) throw ContractViolation("sample window: rate must be > 0");
}

SampleWindow digitize(const AnalogPair& truth, const FrontEndConfig& fe, std::uint64_t seed) {
  fe.validate();
  if (truth.voltage_samples.size() != truth.current_samples.size()) {
    throw ContractViolation("analog pair: channel lengths differ");
  }
  const std::size_t n = truth.voltage_samples.size();
  const kernels::QuantizerParams q = fe.quantizer();

  SampleWindow w;
  w.rate = truth.rate;
  w.voltage_counts.resize(n);
  w.current_counts.resize(n);

  std::size_t clipped =
      kernels::parallel::digitize(truth.voltage_samples, fe.tap.gain(), q, w.voltage_counts);

  const double ct_gain = fe.ct.burden_resistance / static_cast<double>(fe.ct.turns);
  if (fe.current_noise_sigma > 0) {
    std::vector<double> noisy = truth.current_samples;
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(truth.start_time),
                      static_cast<std::uint32_t>(static_cast<std::uint64_t>(truth.start_time) >> 32),
                      0x43544eu};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> noise(0.0, fe.current_noise_sigma);
    for (double& a : noisy) a += noise(rng);
    clipped += kernels::parallel::digitize(noisy, ct_gain, q, w.current_counts);
  } else {
    clipped += kernels::parallel::digitize(truth.current_samples, ct_gain, q, w.current_counts);
  }
  w.saturation_seen = clipped > 0;
  return w;
}

}  // namespace ieqmon
