#include <cmath>

#include "ieqmon/error.hpp"
#include "ieqmon/kernels.hpp"

namespace ieqmon::kernels {

Count quantize(double volts, const QuantizerParams& q) {
  return static_cast<Count>(std::floor(volts / q.reference_volts * static_cast<double>(q.max_count) + 0.5));
}

namespace serial {

double sum(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v;
  return acc;
}

double sum_squares(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("dot: length mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

std::size_t digitize(std::span<const double> in, double gain, const QuantizerParams& q,
                     std::span<Count> out) {
  if (in.size() != out.size()) throw DomainError("digitize: length mismatch");
  // A rail above AREF still saturates the converter.
  const double upper = q.rail_volts < q.reference_volts ? q.rail_volts : q.reference_volts;
  std::size_t clipped = 0;
  for (std::size_t k = 0; k < in.size(); ++k) {
    double v = in[k] * gain + q.bias_volts;
    if (v < 0.0) {
      v = 0.0;
      ++clipped;
    } else if (v > upper) {
      v = upper;
      ++clipped;
    }
    out[k] = quantize(v, q);
  }
  return clipped;
}

void counts_to_physical(std::span<const Count> counts, double offset_counts, double volts_per_count,
                        double scale, std::span<double> out) {
  if (counts.size() != out.size()) throw DomainError("counts_to_physical: length mismatch");
  for (std::size_t k = 0; k < counts.size(); ++k) {
    out[k] = (static_cast<double>(counts[k]) - offset_counts) * volts_per_count * scale;
  }
}

void subtract(std::span<double> x, double value) {
  for (double& v : x) v -= value;
}

}  // namespace serial
}  // namespace ieqmon::kernels
