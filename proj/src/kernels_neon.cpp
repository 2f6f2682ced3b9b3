#include "sievelab/kernels.hpp"

#if defined(SIEVELAB_HAVE_NEON) && defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>

namespace sievelab::kernels {
namespace {

double sum_neon(const double* x, std::size_t n) {
    float64x2_t a0 = vdupq_n_f64(0.0);
    float64x2_t a1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        a0 = vaddq_f64(a0, vld1q_f64(x + i));
        a1 = vaddq_f64(a1, vld1q_f64(x + i + 2));
    }
    double acc = vaddvq_f64(vaddq_f64(a0, a1));
    for (; i < n; ++i) acc += x[i];
    return acc;
}

double dot_neon(const double* x, const double* y, std::size_t n) {
    float64x2_t a0 = vdupq_n_f64(0.0);
    float64x2_t a1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        a0 = vfmaq_f64(a0, vld1q_f64(x + i), vld1q_f64(y + i));
        a1 = vfmaq_f64(a1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
    }
    double acc = vaddvq_f64(vaddq_f64(a0, a1));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double squared_distance_neon(const double* x, const double* y, std::size_t n) {
    float64x2_t a0 = vdupq_n_f64(0.0);
    float64x2_t a1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float64x2_t d0 = vsubq_f64(vld1q_f64(x + i), vld1q_f64(y + i));
        const float64x2_t d1 = vsubq_f64(vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
        a0 = vfmaq_f64(a0, d0, d0);
        a1 = vfmaq_f64(a1, d1, d1);
    }
    double acc = vaddvq_f64(vaddq_f64(a0, a1));
    for (; i < n; ++i) {
        const double t = x[i] - y[i];
        acc += t * t;
    }
    return acc;
}

double chi_square_sum_neon(const double* f, const double* g, std::size_t n) {
    float64x2_t acc2 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t gv = vld1q_f64(g + i);
        const float64x2_t d = vsubq_f64(vld1q_f64(f + i), gv);
        acc2 = vaddq_f64(acc2, vdivq_f64(vmulq_f64(d, d), gv));
    }
    double acc = vaddvq_f64(acc2);
    for (; i < n; ++i) {
        const double t = f[i] - g[i];
        acc += t * t / g[i];
    }
    return acc;
}

double hellinger_sum_neon(const double* f, const double* g, std::size_t n) {
    float64x2_t acc2 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t d = vsubq_f64(vsqrtq_f64(vld1q_f64(f + i)), vsqrtq_f64(vld1q_f64(g + i)));
        acc2 = vfmaq_f64(acc2, d, d);
    }
    double acc = vaddvq_f64(acc2);
    for (; i < n; ++i) {
        const double t = std::sqrt(f[i]) - std::sqrt(g[i]);
        acc += t * t;
    }
    return acc;
}

void affine_combine_neon(double a, const double* x, double b, const double* y, double* out,
                         std::size_t n) {
    const float64x2_t av = vdupq_n_f64(a);
    const float64x2_t bv = vdupq_n_f64(b);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t ax = vmulq_f64(av, vld1q_f64(x + i));
        const float64x2_t by = vmulq_f64(bv, vld1q_f64(y + i));
        vst1q_f64(out + i, vaddq_f64(ax, by));
    }
    for (; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

constexpr KernelTable kNeon{Backend::Neon,       sum_neon,
                            dot_neon,            squared_distance_neon,
                            chi_square_sum_neon, hellinger_sum_neon,
                            affine_combine_neon};

}  // namespace

namespace detail {
const KernelTable* neon_table() { return &kNeon; }
}  // namespace detail

}  // namespace sievelab::kernels

#else

namespace sievelab::kernels::detail {
const KernelTable* neon_table() { return nullptr; }
}  // namespace sievelab::kernels::detail

#endif
