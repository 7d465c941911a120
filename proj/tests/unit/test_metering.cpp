#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ieqmon/error.hpp"
#include "ieqmon/metering.hpp"
#include "support.hpp"

using namespace ieqmon;
using testing::brute_power;
using testing::brute_rms;
using testing::sine;

namespace {

AnalogPair kettle_pair(double vrms, double irms, double pf = 1.0) {
  AnalogPair p;
  p.rate = 2000;
  p.voltage_samples = sine(vrms * std::sqrt(2.0), 50, 0, 2000, 2000);
  p.current_samples = sine(irms * std::sqrt(2.0), 50, -std::acos(pf), 2000, 2000);
  return p;
}

MeterReading measure(const AnalogPair& p, FrontEndConfig fe, std::uint64_t seed = 1) {
  const SampleWindow w = digitize(p, fe, seed);
  return compute_reading(w, fe.adc, fe.bias, CalibrationSet::from_frontend(fe), 100);
}

}  // namespace

TEST_CASE("rms examples") {
  CHECK(rms(std::vector<double>{1, 1, 1, 1}) == 1.0);
  CHECK(rms(std::vector<double>{3, 4}) == doctest::Approx(3.53553).epsilon(1e-6));
  CHECK(testing::rel(rms(sine(313.9554, 50, 0, 2000, 40)), 222.0) < 1e-6);
  CHECK_THROWS_AS(rms(std::vector<double>{}), DomainError);
}

TEST_CASE("active power examples") {
  CHECK(active_power(std::vector<double>{2, 2, 2}, std::vector<double>{2, 2, 2}) == 4.0);
  const auto v = sine(222 * std::sqrt(2.0), 50, 0, 2000, 2000);
  const auto i = sine(7.38 * std::sqrt(2.0), 50, 0, 2000, 2000);
  CHECK(active_power(v, i) == doctest::Approx(1638.36).epsilon(1e-9));
  const auto q = sine(7.38 * std::sqrt(2.0), 50, std::numbers::pi / 2, 2000, 2000);
  CHECK(std::fabs(active_power(v, q)) <= 1e-9 * 222 * 7.38);
  CHECK_THROWS_AS(active_power(std::vector<double>{1, 2}, std::vector<double>{1}), DomainError);
  CHECK_THROWS_AS(active_power(std::vector<double>{}, std::vector<double>{}), DomainError);
}

TEST_CASE("property: analytic sinusoids across random amplitude and phase") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> amp(0.1, 400.0);
  std::uniform_real_distribution<double> phase(0.0, std::numbers::pi);
  for (int n = 0; n < 20; ++n) {
    const double va = amp(rng), ia = amp(rng) / 20, phi = phase(rng);
    const auto v = sine(va, 50, 0, 2000, 2000);
    const auto i = sine(ia, 50, -phi, 2000, 2000);
    CHECK(testing::rel(rms(v), va / std::sqrt(2.0)) < 1e-6);
    CHECK(testing::rel(rms(i), ia / std::sqrt(2.0)) < 1e-6);
    const double expected = rms(v) * rms(i) * std::cos(phi);
    CHECK(std::fabs(active_power(v, i) - brute_power(v, i)) <= 1e-6 * std::fabs(brute_power(v, i)) + 1e-9);
    CHECK(std::fabs(active_power(v, i) - expected) <= 1e-6 * rms(v) * rms(i));
  }
}

TEST_CASE("property: rms is scale equivariant and power obeys Cauchy-Schwarz") {
  std::mt19937_64 rng(78);
  std::normal_distribution<double> g(0.0, 3.0);
  std::uniform_real_distribution<double> k(-50.0, 50.0);
  for (int n = 0; n < 200; ++n) {
    std::vector<double> a(1 + rng() % 500), b(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) {
      a[j] = g(rng);
      b[j] = g(rng);
    }
    const double s = k(rng);
    std::vector<double> scaled(a);
    for (double& x : scaled) x *= s;
    CHECK(testing::rel(rms(scaled), std::fabs(s) * rms(a)) < 1e-12);
    CHECK(std::fabs(active_power(a, b)) <= rms(a) * rms(b) * (1 + 1e-12));
  }
}

TEST_CASE("reconstruct examples") {
  const FrontEndConfig fe = FrontEndConfig::defaults();
  CalibrationSet cal = CalibrationSet::from_frontend(fe);
  cal.voltage_scale = 212.96;

  SampleWindow w;
  w.rate = 2000;
  w.voltage_counts = {4095, 4095};
  w.current_counts = {2048, 2048};
  auto phys = reconstruct(w, fe.adc, fe.bias, cal);
  CHECK(phys.volts[0] == doctest::Approx(351.384).epsilon(1e-6));
  CHECK(phys.volts[0] == doctest::Approx(351.4).epsilon(1e-3));

  cal.bias_counts_estimate = 2048.0;
  phys = reconstruct(w, fe.adc, fe.bias, cal);
  CHECK(phys.amperes[0] == 0.0);
  CHECK(phys.amperes[1] == 0.0);
}

TEST_CASE("calibration inverts the front end") {
  const FrontEndConfig fe = FrontEndConfig::defaults();
  const CalibrationSet cal = CalibrationSet::from_frontend(fe);
  CHECK(cal.current_scale == doctest::Approx(fe.ct.turns / fe.ct.burden_resistance));
  CHECK(cal.voltage_scale == doctest::Approx(1.0 / fe.tap.gain()));
  CHECK_NOTHROW(cal.validate());
  CalibrationSet bad = cal;
  bad.current_scale = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("kettle window through the default chain") {
  FrontEndConfig fe = FrontEndConfig::defaults();
  const AnalogPair p = kettle_pair(222.0, 7.40);
  const SampleWindow w = digitize(p, fe, 3);
  const auto phys = reconstruct(w, fe.adc, fe.bias, CalibrationSet::from_frontend(fe));
  CHECK(testing::rel(brute_rms(phys.amperes), brute_rms(p.current_samples)) < 0.005);

  const MeterReading r = measure(p, fe);
  CHECK(testing::rel(r.v_rms, 222.0) < 0.01);
  CHECK(testing::rel(r.i_rms, 7.40) < 0.01);
  CHECK(testing::rel(r.active_power, r.v_rms * r.i_rms) < 0.01);
  CHECK_FALSE(r.suspect);
  CHECK(r.timestamp == 100);
}

TEST_CASE("all-off window sits on the quantization floor") {
  FrontEndConfig fe = FrontEndConfig::defaults();
  fe.current_noise_sigma = 0.0;
  const MeterReading r = measure(kettle_pair(222.0, 0.0), fe);
  const double lsb_amps = fe.adc.volts_per_count() * CalibrationSet::from_frontend(fe).current_scale;
  CHECK(r.i_rms <= lsb_amps);
  CHECK(std::fabs(r.active_power) <= r.v_rms * lsb_amps);
}

TEST_CASE("fan current within 2 percent") {
  const MeterReading r = measure(kettle_pair(223.0, 0.11), FrontEndConfig::defaults());
  CHECK(testing::rel(r.i_rms, 0.110) < 0.02);
}

TEST_CASE("saturated windows are delivered but suspect") {
  const MeterReading r = measure(kettle_pair(222.0, 40.0), FrontEndConfig::defaults());
  CHECK(r.suspect);
  CHECK(r.i_rms > 0);
}

TEST_CASE("property: noiseless chain matches ground truth within 0.5 percent") {
  std::mt19937_64 rng(91);
  std::uniform_real_distribution<double> amps(0.5, 9.0);
  std::uniform_real_distribution<double> volts(200.0, 240.0);
  std::uniform_real_distribution<double> pf(0.6, 1.0);
  FrontEndConfig fe = FrontEndConfig::defaults();
  fe.current_noise_sigma = 0.0;
  for (int n = 0; n < 30; ++n) {
    const AnalogPair p = kettle_pair(volts(rng), amps(rng), pf(rng));
    const MeterReading r = measure(p, fe);
    CHECK(testing::rel(r.v_rms, brute_rms(p.voltage_samples)) < 0.005);
    CHECK(testing::rel(r.i_rms, brute_rms(p.current_samples)) < 0.005);
    CHECK(testing::rel(r.active_power, brute_power(p.voltage_samples, p.current_samples)) < 0.005);
    CHECK(std::fabs(r.active_power) <= r.v_rms * r.i_rms * (1 + 1e-9));
  }
}

TEST_CASE("percent error examples") {
  CHECK(round_half_up(percent_error(1648.69, 1653.9), 2) == 0.32);
  CHECK(round_half_up(percent_error(26.9, 26.7), 2) == 0.75);
  CHECK(round_half_up(percent_error(42.0, 42.0), 2) == 0.0);
  CHECK(round_half_up(percent_error(-3.0, -3.0), 2) == 0.0);
  CHECK_THROWS_AS(percent_error(1.0, 0.0), DomainError);
}

TEST_CASE("golden percent errors from reference measurements") {
  struct Row {
    double measured, reference, printed;
  };
  const Row rows[] = {
      {1648.69, 1653.9, 0.32}, {37.98, 38.00, 0.05}, {1195.19, 1202.43, 0.60}, {24.57, 24.59, 0.08},
      {222, 223, 0.45},        {222, 223, 0.45},     {222, 223, 0.45},         {222, 223, 0.45},
      {7.38, 7.40, 0.27},      {0.17, 0.17, 0.00},   {5.35, 5.38, 0.56},       {0.11, 0.11, 0.00},
      {26.9, 26.7, 0.75},      {56.1, 56.3, 0.36},   {568, 569, 0.18},
  };
  for (const Row& r : rows) {
    CAPTURE(r.measured);
    CHECK(round_half_up(percent_error(r.measured, r.reference), 2) == doctest::Approx(r.printed).epsilon(1e-12));
  }
}

TEST_CASE("round half up") {
  CHECK(round_half_up(2.675, 2) == doctest::Approx(2.68));
  CHECK(round_half_up(0.125, 2) == doctest::Approx(0.13));
  CHECK(round_half_up(0.124999, 2) == doctest::Approx(0.12));
  CHECK(round_half_up(1.005, 2) == doctest::Approx(1.01));
}
