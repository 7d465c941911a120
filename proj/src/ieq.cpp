#include "ieqmon/ieq.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ieqmon/error.hpp"

namespace ieqmon {

namespace {

constexpr double kTempMin = -40.0;
constexpr double kTempMax = 80.0;
constexpr double kHumidMax = 99.9;

std::mt19937_64 make_rng(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
  return std::mt19937_64(seq);
}

double drift_field(double x, double dt, const FieldDrift& d, double z) {
  double next = x + d.reversion_rate * (d.target - x) * dt + d.sigma * std::sqrt(dt) * z;
  return std::clamp(next, d.bounds.min, d.bounds.max);
}

}  // namespace

IeqState IeqState::clamped() const {
  return {std::clamp(temperature, kTempMin, kTempMax), std::clamp(humidity, 0.0, kHumidMax),
          std::max(co2, 0.0)};
}

DriftParams DriftParams::frozen(const IeqState& s) {
  return {{s.temperature, 0.0, 0.0, {s.temperature, s.temperature}},
          {s.humidity, 0.0, 0.0, {s.humidity, s.humidity}},
          {s.co2, 0.0, 0.0, {s.co2, s.co2}}};
}

IeqState step_environment(const IeqState& state, double dt, const DriftParams& drift, std::uint64_t seed) {
  if (!(dt > 0)) throw DomainError("step_environment: dt must be > 0");
  const bool still = drift.temperature.sigma == 0 && drift.humidity.sigma == 0 && drift.co2.sigma == 0 &&
                     drift.temperature.reversion_rate == 0 && drift.humidity.reversion_rate == 0 &&
                     drift.co2.reversion_rate == 0;
  if (still) return state;

  auto rng = make_rng(seed, 0x454e56u);
  std::normal_distribution<double> z(0.0, 1.0);
  IeqState next;
  next.temperature = drift_field(state.temperature, dt, drift.temperature, z(rng));
  next.humidity = drift_field(state.humidity, dt, drift.humidity, z(rng));
  next.co2 = drift_field(state.co2, dt, drift.co2, z(rng));
  return next.clamped();
}

double Co2Curve::to_volts(double ppm) const {
  return baseline_volts + volts_per_decade * std::log10(ppm / baseline_ppm);
}

double Co2Curve::to_ppm(double volts) const {
  if (volts <= 0.0) return 0.0;
  return baseline_ppm * std::pow(10.0, (volts - baseline_volts) / volts_per_decade);
}

void IeqSensorModel::validate() const {
  if (!(temp_resolution > 0) || !(humid_resolution > 0)) throw ConfigError("ieq resolutions must be > 0");
  if (temp_noise_sigma < 0 || humid_noise_sigma < 0 || co2_noise_sigma < 0) {
    throw ConfigError("ieq noise sigmas must be >= 0");
  }
  if (!(co2_curve.baseline_ppm > 0) || !(co2_curve.volts_per_decade > 0)) {
    throw ConfigError("co2_curve needs baseline_ppm > 0 and volts_per_decade > 0");
  }
  adc.validate();
}

double quantize_to(double value, double resolution) {
  const double steps = std::floor(value / resolution + 0.5 + 1e-9);
  // Dividing by an integral inverse (10 for 0.1) lands on the nearest double to the decimal.
  const double inverse = 1.0 / resolution;
  if (std::fabs(inverse - std::round(inverse)) < 1e-9) return steps / std::round(inverse);
  return steps * resolution;
}

TempHumidity read_temp_humidity(const IeqState& state, const IeqSensorModel& model, std::uint64_t seed) {
  model.validate();
  auto rng = make_rng(seed, 0x414d32u);
  std::normal_distribution<double> z(0.0, 1.0);
  const double t = state.temperature + model.temp_noise_sigma * z(rng);
  const double h = state.humidity + model.humid_noise_sigma * z(rng);
  return {std::clamp(quantize_to(t, model.temp_resolution), kTempMin, kTempMax),
          std::clamp(quantize_to(h, model.humid_resolution), 0.0, kHumidMax)};
}

std::int64_t read_co2(const IeqState& state, const IeqSensorModel& model, std::uint64_t seed) {
  model.validate();
  auto rng = make_rng(seed, 0x4d5133u);
  std::normal_distribution<double> z(0.0, 1.0);
  const double ppm = state.co2 + model.co2_curve.offset_ppm + model.co2_noise_sigma * z(rng);
  const double volts = ppm > 0 ? model.co2_curve.to_volts(ppm) : 0.0;
  const double in_range = std::clamp(volts, 0.0, model.adc.reference_volts);
  const AdcCount count = adc_sample(in_range, model.adc);
  const double back = model.co2_curve.to_ppm(static_cast<double>(count) * model.adc.volts_per_count());
  return static_cast<std::int64_t>(std::floor(back + 0.5));
}

}  // namespace ieqmon
