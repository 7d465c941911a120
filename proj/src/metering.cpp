#include "ieqmon/metering.hpp"

#include <cmath>

#include "ieqmon/error.hpp"
#include "ieqmon/kernels.hpp"

namespace ieqmon {

CalibrationSet CalibrationSet::from_frontend(const FrontEndConfig& fe) {
  fe.validate();
  CalibrationSet cal;
  cal.current_scale = static_cast<double>(fe.ct.turns) / fe.ct.burden_resistance;
  cal.voltage_scale = 1.0 / fe.tap.gain();
  return cal;
}

void CalibrationSet::validate() const {
  if (!(current_scale > 0) || !(voltage_scale > 0)) {
    throw ConfigError("calibration scales must be > 0");
  }
}

PhysicalSignals reconstruct(const SampleWindow& window, const AdcModel& adc, const BiasNetwork& bias,
                            const CalibrationSet& cal) {
  window.validate();
  cal.validate();
  const double lsb = adc.volts_per_count();
  const double offset = cal.bias_counts_estimate.value_or(bias.bias_volts / lsb);

  PhysicalSignals out;
  out.volts.resize(window.sample_count());
  out.amperes.resize(window.sample_count());
  kernels::parallel::counts_to_physical(window.voltage_counts, offset, lsb, cal.voltage_scale, out.volts);
  kernels::parallel::counts_to_physical(window.current_counts, offset, lsb, cal.current_scale, out.amperes);
  return out;
}

double rms(std::span<const double> samples) {
  if (samples.empty()) throw DomainError("rms: empty input");
  return std::sqrt(kernels::parallel::sum_squares(samples) / static_cast<double>(samples.size()));
}

double active_power(std::span<const double> v, std::span<const double> i) {
  if (v.size() != i.size()) throw DomainError("active_power: length mismatch");
  if (v.empty()) throw DomainError("active_power: empty input");
  return kernels::parallel::dot(v, i) / static_cast<double>(v.size());
}

MeterReading compute_reading(const SampleWindow& window, const AdcModel& adc, const BiasNetwork& bias,
                             const CalibrationSet& cal, UnixSeconds timestamp) {
  PhysicalSignals s = reconstruct(window, adc, bias, cal);
  const auto n = static_cast<double>(window.sample_count());
  // Residual DC left by an imperfect bias estimate.
  kernels::parallel::subtract(s.volts, kernels::parallel::sum(s.volts) / n);
  kernels::parallel::subtract(s.amperes, kernels::parallel::sum(s.amperes) / n);

  MeterReading r;
  r.timestamp = timestamp;
  r.v_rms = rms(s.volts);
  r.i_rms = rms(s.amperes);
  r.active_power = active_power(s.volts, s.amperes);
  r.suspect = window.saturation_seen;
  return r;
}

double percent_error(double measured, double reference) {
  if (reference == 0.0) throw DomainError("percent_error: reference must be non-zero");
  return std::fabs(measured - reference) / std::fabs(reference) * 100.0;
}

double round_half_up(double value, int places) {
  const double scale = std::pow(10.0, places);
  const double scaled = value * scale;
  // Nudge values like 2.675 (stored as 2.67499...) onto the intended side of the tie.
  const double nudge = std::fabs(scaled) * 1e-12 + 1e-12;
  return std::floor(scaled + 0.5 + nudge) / scale;
}

}  // namespace ieqmon
