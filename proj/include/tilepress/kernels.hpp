#pragma once

#include <cstddef>

// Dense elementwise kernels with a scalar reference and an AVX2 variant picked at
// runtime. Variants perform the same IEEE operations per element (no FMA, no
// reassociation), so results are bitwise identical across CPUs.
namespace tp::kernels {

enum class Isa { Scalar, Avx2 };

Isa active_isa();
const char* isa_name(Isa isa);
// Force a variant (tests); Avx2 is ignored when the CPU lacks it. Returns the active one.
Isa select_isa(Isa isa);
bool cpu_has_avx2();

// y += a * x
void axpy(double a, const double* x, double* y, std::size_t n);
// x *= a
void scale(double a, double* x, std::size_t n);
// min and max of y[i] / x[i] over i with x[i] > 0; returns false when no such i
bool ratio_bounds(const double* y, const double* x, std::size_t n, double* lo, double* hi);

namespace scalar {
void axpy(double a, const double* x, double* y, std::size_t n);
void scale(double a, double* x, std::size_t n);
bool ratio_bounds(const double* y, const double* x, std::size_t n, double* lo, double* hi);
}  // namespace scalar

namespace avx2 {
void axpy(double a, const double* x, double* y, std::size_t n);
void scale(double a, double* x, std::size_t n);
bool ratio_bounds(const double* y, const double* x, std::size_t n, double* lo, double* hi);
}  // namespace avx2

}  // namespace tp::kernels
