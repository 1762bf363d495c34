#include "tilepress/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <limits>

namespace tp::kernels {

namespace scalar {

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale(double a, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

bool ratio_bounds(const double* y, const double* x, std::size_t n, double* lo, double* hi) {
    double mn = std::numeric_limits<double>::infinity(), mx = -mn;
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0)) continue;
        double r = y[i] / x[i];
        if (r < mn) mn = r;
        if (r > mx) mx = r;
        any = true;
    }
    *lo = mn;
    *hi = mx;
    return any;
}

}  // namespace scalar

namespace {

struct Table {
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*scale)(double, double*, std::size_t);
    bool (*ratio_bounds)(const double*, const double*, std::size_t, double*, double*);
    Isa isa;
};

Table make(Isa isa) {
    if (isa == Isa::Avx2) return {avx2::axpy, avx2::scale, avx2::ratio_bounds, Isa::Avx2};
    return {scalar::axpy, scalar::scale, scalar::ratio_bounds, Isa::Scalar};
}

Table initial() {
    const char* env = std::getenv("TILEPRESS_ISA");
    if (env && std::strcmp(env, "scalar") == 0) return make(Isa::Scalar);
    return make(cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar);
}

Table& table() {
    static Table t = initial();
    return t;
}

}  // namespace

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

Isa active_isa() { return table().isa; }

const char* isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

Isa select_isa(Isa isa) {
    if (isa == Isa::Avx2 && !cpu_has_avx2()) isa = Isa::Scalar;
    table() = make(isa);
    return isa;
}

void axpy(double a, const double* x, double* y, std::size_t n) { table().axpy(a, x, y, n); }
void scale(double a, double* x, std::size_t n) { table().scale(a, x, n); }
bool ratio_bounds(const double* y, const double* x, std::size_t n, double* lo, double* hi) {
    return table().ratio_bounds(y, x, n, lo, hi);
}

}  // namespace tp::kernels
