#include "sievelab/kernels.hpp"

#include <cmath>

namespace sievelab::kernels {
namespace {

double sum_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double squared_distance_scalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = x[i] - y[i];
        acc += t * t;
    }
    return acc;
}

double chi_square_sum_scalar(const double* f, const double* g, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = f[i] - g[i];
        acc += t * t / g[i];
    }
    return acc;
}

double hellinger_sum_scalar(const double* f, const double* g, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = std::sqrt(f[i]) - std::sqrt(g[i]);
        acc += t * t;
    }
    return acc;
}

void affine_combine_scalar(double a, const double* x, double b, const double* y, double* out,
                           std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

constexpr KernelTable kScalar{Backend::Scalar,          sum_scalar,
                              dot_scalar,               squared_distance_scalar,
                              chi_square_sum_scalar,    hellinger_sum_scalar,
                              affine_combine_scalar};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace sievelab::kernels
