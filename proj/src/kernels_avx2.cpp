// Compiled with -mavx2 -mfma. Nothing in this file may run before the
// dispatcher has confirmed both features on the host CPU.

#include "sievelab/kernels.hpp"

#if defined(SIEVELAB_HAVE_AVX2)

#include <immintrin.h>

#include <cmath>

namespace sievelab::kernels {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double sum_avx2(const double* x, std::size_t n) {
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
        a1 = _mm256_add_pd(a1, _mm256_loadu_pd(x + i + 4));
    }
    if (i + 4 <= n) {
        a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x + i));
        i += 4;
    }
    double acc = hsum(_mm256_add_pd(a0, a1));
    for (; i < n; ++i) acc += x[i];
    return acc;
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
        a1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), a1);
    }
    if (i + 4 <= n) {
        a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
        i += 4;
    }
    double acc = hsum(_mm256_add_pd(a0, a1));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double squared_distance_avx2(const double* x, const double* y, std::size_t n) {
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4));
        a0 = _mm256_fmadd_pd(d0, d0, a0);
        a1 = _mm256_fmadd_pd(d1, d1, a1);
    }
    if (i + 4 <= n) {
        const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        a0 = _mm256_fmadd_pd(d0, d0, a0);
        i += 4;
    }
    double acc = hsum(_mm256_add_pd(a0, a1));
    for (; i < n; ++i) {
        const double t = x[i] - y[i];
        acc += t * t;
    }
    return acc;
}

double chi_square_sum_avx2(const double* f, const double* g, std::size_t n) {
    __m256d acc4 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d gv = _mm256_loadu_pd(g + i);
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(f + i), gv);
        acc4 = _mm256_add_pd(acc4, _mm256_div_pd(_mm256_mul_pd(d, d), gv));
    }
    double acc = hsum(acc4);
    for (; i < n; ++i) {
        const double t = f[i] - g[i];
        acc += t * t / g[i];
    }
    return acc;
}

double hellinger_sum_avx2(const double* f, const double* g, std::size_t n) {
    __m256d acc4 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_sqrt_pd(_mm256_loadu_pd(f + i)),
                                        _mm256_sqrt_pd(_mm256_loadu_pd(g + i)));
        acc4 = _mm256_fmadd_pd(d, d, acc4);
    }
    double acc = hsum(acc4);
    for (; i < n; ++i) {
        const double t = std::sqrt(f[i]) - std::sqrt(g[i]);
        acc += t * t;
    }
    return acc;
}

void affine_combine_avx2(double a, const double* x, double b, const double* y, double* out,
                         std::size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    const __m256d bv = _mm256_set1_pd(b);
    std::size_t i = 0;
    // No FMA here: a*x + b*y must round exactly like the scalar loop so that
    // kappa = 1 reproduces x bit for bit.
    for (; i + 4 <= n; i += 4) {
        const __m256d ax = _mm256_mul_pd(av, _mm256_loadu_pd(x + i));
        const __m256d by = _mm256_mul_pd(bv, _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(out + i, _mm256_add_pd(ax, by));
    }
    for (; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

constexpr KernelTable kAvx2{Backend::Avx2,       sum_avx2,
                            dot_avx2,            squared_distance_avx2,
                            chi_square_sum_avx2, hellinger_sum_avx2,
                            affine_combine_avx2};

}  // namespace

namespace detail {
const KernelTable* avx2_table() { return &kAvx2; }
}  // namespace detail

}  // namespace sievelab::kernels

#else

namespace sievelab::kernels::detail {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace sievelab::kernels::detail

#endif
