#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ieqmon/error.hpp"
#include "ieqmon/kernels.hpp"

namespace ieqmon::kernels::parallel {

namespace {

// OpenMP wants a signed induction variable.
using Index = std::ptrdiff_t;

bool go_wide(std::size_t n) { return n >= kMinParallelSize; }

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

double sum(std::span<const double> x) {
  if (!go_wide(x.size())) return serial::sum(x);
  const auto n = static_cast<Index>(x.size());
  const double* p = x.data();
  double acc = 0.0;
#pragma omp parallel for reduction(+ : acc) schedule(static)
  for (Index k = 0; k < n; ++k) acc += p[k];
  return acc;
}

double sum_squares(std::span<const double> x) {
  if (!go_wide(x.size())) return serial::sum_squares(x);
  const auto n = static_cast<Index>(x.size());
  const double* p = x.data();
  double acc = 0.0;
#pragma omp parallel for reduction(+ : acc) schedule(static)
  for (Index k = 0; k < n; ++k) acc += p[k] * p[k];
  return acc;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("dot: length mismatch");
  if (!go_wide(a.size())) return serial::dot(a, b);
  const auto n = static_cast<Index>(a.size());
  const double* pa = a.data();
  const double* pb = b.data();
  double acc = 0.0;
#pragma omp parallel for reduction(+ : acc) schedule(static)
  for (Index k = 0; k < n; ++k) acc += pa[k] * pb[k];
  return acc;
}

std::size_t digitize(std::span<const double> in, double gain, const QuantizerParams& q,
                     std::span<Count> out) {
  if (in.size() != out.size()) throw DomainError("digitize: length mismatch");
  if (!go_wide(in.size())) return serial::digitize(in, gain, q, out);
  const auto n = static_cast<Index>(in.size());
  const double* src = in.data();
  Count* dst = out.data();
  // A rail above AREF still saturates the converter.
  const double upper = q.rail_volts < q.reference_volts ? q.rail_volts : q.reference_volts;
  std::size_t clipped = 0;
#pragma omp parallel for reduction(+ : clipped) schedule(static)
  for (Index k = 0; k < n; ++k) {
    double v = src[k] * gain + q.bias_volts;
    if (v < 0.0) {
      v = 0.0;
      ++clipped;
    } else if (v > upper) {
      v = upper;
      ++clipped;
    }
    dst[k] = quantize(v, q);
  }
  return clipped;
}

void counts_to_physical(std::span<const Count> counts, double offset_counts, double volts_per_count,
                        double scale, std::span<double> out) {
  if (counts.size() != out.size()) throw DomainError("counts_to_physical: length mismatch");
  if (!go_wide(counts.size())) return serial::counts_to_physical(counts, offset_counts, volts_per_count, scale, out);
  const auto n = static_cast<Index>(counts.size());
  const Count* src = counts.data();
  double* dst = out.data();
#pragma omp parallel for schedule(static)
  for (Index k = 0; k < n; ++k) {
    dst[k] = (static_cast<double>(src[k]) - offset_counts) * volts_per_count * scale;
  }
}

void subtract(std::span<double> x, double value) {
  if (!go_wide(x.size())) return serial::subtract(x, value);
  const auto n = static_cast<Index>(x.size());
  double* p = x.data();
#pragma omp parallel for schedule(static)
  for (Index k = 0; k < n; ++k) p[k] -= value;
}

}  // namespace ieqmon::kernels::parallel
