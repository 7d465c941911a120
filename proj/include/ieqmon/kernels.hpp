#pragma once

// Sample-loop kernels shared by the front-end and metering code.
//
// Every kernel exists twice: `serial` is the plain reference loop kept for
// testing, `parallel` is the OpenMP version the library uses. Both take the
// same arguments and must agree to rounding (reductions may sum in a
// different order).

#include <cstddef>
#include <cstdint>
#include <span>

namespace ieqmon::kernels {

using Count = std::int64_t;

/// Affine ADC model parameters shared by the digitize kernels.
struct QuantizerParams {
  double bias_volts = 1.65;
  double rail_volts = 3.3;
  double reference_volts = 3.3;
  Count max_count = 4095;
};

namespace serial {

double sum(std::span<const double> x);
double sum_squares(std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);

/// out[k] = clamp(in[k] * gain + bias, 0, rail) quantized round-half-up.
/// Returns the number of samples that hit either rail.
std::size_t digitize(std::span<const double> in, double gain, const QuantizerParams& q,
                     std::span<Count> out);

/// out[k] = (counts[k] - offset_counts) * volts_per_count * scale
void counts_to_physical(std::span<const Count> counts, double offset_counts, double volts_per_count,
                        double scale, std::span<double> out);

void subtract(std::span<double> x, double value);

}  // namespace serial

namespace parallel {

double sum(std::span<const double> x);
double sum_squares(std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);
std::size_t digitize(std::span<const double> in, double gain, const QuantizerParams& q,
                     std::span<Count> out);
void counts_to_physical(std::span<const Count> counts, double offset_counts, double volts_per_count,
                        double scale, std::span<double> out);
void subtract(std::span<double> x, double value);

/// Below this many samples the parallel kernels run on the calling thread.
inline constexpr std::size_t kMinParallelSize = 1 << 14;

/// Number of OpenMP threads available (1 when built without OpenMP).
int max_threads();

}  // namespace parallel

/// Single-sample ADC conversion used by both kernel variants.
Count quantize(double volts, const QuantizerParams& q);

}  // namespace ieqmon::kernels
