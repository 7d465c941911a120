#include "ieqmon/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "ieqmon/error.hpp"

namespace ieqmon {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void WaveformSpec::validate() const {
  require(std::isfinite(mains_frequency) && mains_frequency > 0, "mains_frequency must be > 0");
  require(std::isfinite(nominal_rms_voltage) && nominal_rms_voltage >= 0,
          "nominal_rms_voltage must be >= 0");
  require(std::isfinite(noise_sigma) && noise_sigma >= 0, "noise_sigma must be >= 0");
  require(std::isfinite(synthesis_rate) && synthesis_rate >= 20.0 * mains_frequency,
          "synthesis_rate must be >= 20 x mains_frequency");
  require(std::isfinite(initial_phase), "initial_phase must be finite");
}

LoadProfile LoadProfile::always_on(std::string name, double rms_current, double power_factor) {
  return LoadProfile{std::move(name), rms_current, power_factor,
                     {Interval{-std::numeric_limits<double>::infinity(),
                               std::numeric_limits<double>::infinity()}}};
}

void LoadProfile::validate() const {
  const std::string who = "load '" + appliance_name + "': ";
  require(std::isfinite(rms_current) && rms_current >= 0, who + "rms_current must be >= 0");
  require(power_factor >= 0 && power_factor <= 1, who + "power_factor must be in [0, 1]");
  for (std::size_t k = 0; k < on_intervals.size(); ++k) {
    const Interval& iv = on_intervals[k];
    require(iv.start < iv.end, who + "on_intervals entries need start < end");
    if (k > 0) {
      require(on_intervals[k - 1].end <= iv.start,
              who + "on_intervals must be time-ordered and non-overlapping");
    }
  }
}

bool LoadProfile::is_on(double t) const {
  return std::any_of(on_intervals.begin(), on_intervals.end(),
                     [t](const Interval& iv) { return iv.contains(t); });
}

std::string to_string(GridEventKind kind) { return kind == GridEventKind::swell ? "swell" : "sag"; }

void GridEvent::validate() const {
  require(std::isfinite(start), "event start must be finite");
  require(std::isfinite(duration) && duration > 0, "event duration must be > 0");
  if (kind == GridEventKind::swell) {
    require(magnitude_factor > 1, "swell requires magnitude_factor > 1");
  } else {
    require(magnitude_factor >= 0 && magnitude_factor < 1, "sag requires 0 <= magnitude_factor < 1");
  }
}

void validate_events(const std::vector<GridEvent>& events) {
  for (const GridEvent& e : events) e.validate();
  for (std::size_t a = 0; a < events.size(); ++a) {
    for (std::size_t b = a + 1; b < events.size(); ++b) {
      const GridEvent& x = events[a];
      const GridEvent& y = events[b];
      const bool overlap = x.start < y.end() && y.start < x.end();
      if (overlap && x.magnitude_factor != y.magnitude_factor) {
        throw ConfigError("grid events overlap with different magnitude factors");
      }
    }
  }
}

double event_factor_at(const std::vector<GridEvent>& events, double t) {
  for (const GridEvent& e : events) {
    if (t >= e.start && t < e.end()) return e.magnitude_factor;
  }
  return 1.0;
}

std::size_t sample_count(const TimeWindow& window, double rate) {
  const double n = std::round(window.duration * rate);
  return n > 0 ? static_cast<std::size_t>(n) : 0;
}

std::vector<double> synth_voltage(const WaveformSpec& spec, const std::vector<GridEvent>& events,
                                  const TimeWindow& window, std::uint64_t seed) {
  spec.validate();
  if (!(window.duration > 0)) throw ConfigError("window duration must be > 0");
  validate_events(events);

  const std::size_t n = sample_count(window, spec.synthesis_rate);
  const auto first_index = static_cast<std::int64_t>(std::llround(window.start * spec.synthesis_rate));
  const double peak = std::numbers::sqrt2 * spec.nominal_rms_voltage;
  const double omega = kTwoPi * spec.mains_frequency;

  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = window.start + static_cast<double>(k) / spec.synthesis_rate;
    out[k] = peak * event_factor_at(events, t) * std::sin(omega * t + spec.initial_phase);
  }
  if (spec.noise_sigma > 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(first_index),
                      static_cast<std::uint32_t>(static_cast<std::uint64_t>(first_index) >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    for (double& v : out) v += noise(rng);
  }
  return out;
}

std::vector<double> synth_current(const LoadProfile& load, const WaveformSpec& spec,
                                  const TimeWindow& window) {
  spec.validate();
  load.validate();
  if (!(window.duration > 0)) throw ConfigError("window duration must be > 0");

  const std::size_t n = sample_count(window, spec.synthesis_rate);
  const double peak = std::numbers::sqrt2 * load.rms_current;
  const double omega = kTwoPi * spec.mains_frequency;
  const double lag = std::acos(load.power_factor);

  std::vector<double> out(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = window.start + static_cast<double>(k) / spec.synthesis_rate;
    if (load.is_on(t)) out[k] = peak * std::sin(omega * t + spec.initial_phase - lag);
  }
  return out;
}

}  // namespace ieqmon
