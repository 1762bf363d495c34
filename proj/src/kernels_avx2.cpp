#include "tilepress/kernels.hpp"

#include <limits>

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define TP_HAVE_X86 1
#else
#define TP_HAVE_X86 0
#endif

namespace tp::kernels::avx2 {

#if TP_HAVE_X86

void axpy(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vx = _mm256_loadu_pd(x + i);
        __m256d vy = _mm256_loadu_pd(y + i);
        // separate multiply and add to match the scalar rounding
        vy = _mm256_add_pd(vy, _mm256_mul_pd(va, vx));
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void scale(double a, double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), va));
    for (; i < n; ++i) x[i] *= a;
}

bool ratio_bounds(const double* y, const double* x, std::size_t n, double* lo, double* hi) {
    const double inf = std::numeric_limits<double>::infinity();
    __m256d vmin = _mm256_set1_pd(inf), vmax = _mm256_set1_pd(-inf);
    const __m256d zero = _mm256_setzero_pd();
    int any = 0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vx = _mm256_loadu_pd(x + i);
        __m256d vy = _mm256_loadu_pd(y + i);
        __m256d pos = _mm256_cmp_pd(vx, zero, _CMP_GT_OQ);
        int mask = _mm256_movemask_pd(pos);
        if (!mask) continue;
        any = 1;
        // lanes with x <= 0 divide 1/1 and are blended away
        __m256d one = _mm256_set1_pd(1.0);
        __m256d r = _mm256_div_pd(_mm256_blendv_pd(one, vy, pos), _mm256_blendv_pd(one, vx, pos));
        vmin = _mm256_min_pd(vmin, _mm256_blendv_pd(_mm256_set1_pd(inf), r, pos));
        vmax = _mm256_max_pd(vmax, _mm256_blendv_pd(_mm256_set1_pd(-inf), r, pos));
    }
    alignas(32) double a[4], b[4];
    _mm256_store_pd(a, vmin);
    _mm256_store_pd(b, vmax);
    double mn = inf, mx = -inf;
    for (int k = 0; k < 4; ++k) {
        if (a[k] < mn) mn = a[k];
        if (b[k] > mx) mx = b[k];
    }
    for (; i < n; ++i) {
        if (!(x[i] > 0)) continue;
        any = 1;
        double r = y[i] / x[i];
        if (r < mn) mn = r;
        if (r > mx) mx = r;
    }
    *lo = mn;
    *hi = mx;
    return any != 0;
}

#else

void axpy(double a, const double* x, double* y, std::size_t n) { scalar::axpy(a, x, y, n); }
void scale(double a, double* x, std::size_t n) { scalar::scale(a, x, n); }
bool ratio_bounds(const double* y, const double* x, std::size_t n, double* lo, double* hi) {
    return scalar::ratio_bounds(y, x, n, lo, hi);
}

#endif

}  // namespace tp::kernels::avx2
