#pragma once

// Data-parallel inner loops shared by every module: quadrature sums over grid
// cells, pairwise distances for packings, and count-weighted log-likelihoods.
//
// Each kernel has a scalar reference implementation and, where the target
// supports it, an AVX2+FMA (x86-64) or NEON (aarch64) variant. The variant is
// picked once at first use from the running CPU; the environment variable
// SIEVELAB_KERNELS=scalar|avx2|neon forces a choice. Vector variants reorder
// floating-point reductions, so results agree with the scalar reference to a
// few ulps of the accumulated magnitude, not bit for bit.

#include <cstddef>
#include <span>
#include <string_view>

namespace sievelab::kernels {

enum class Backend { Scalar, Avx2, Neon };

struct KernelTable {
    Backend backend;
    double (*sum)(const double* x, std::size_t n);
    double (*dot)(const double* x, const double* y, std::size_t n);
    double (*squared_distance)(const double* x, const double* y, std::size_t n);
    // sum_i (f_i - g_i)^2 / g_i
    double (*chi_square_sum)(const double* f, const double* g, std::size_t n);
    // sum_i (sqrt f_i - sqrt g_i)^2
    double (*hellinger_sum)(const double* f, const double* g, std::size_t n);
    // out_i = a * x_i + b * y_i
    void (*affine_combine)(double a, const double* x, double b, const double* y,
                           double* out, std::size_t n);
};

const KernelTable& scalar_table();

// nullptr when the variant was not compiled in or the CPU lacks the features.
const KernelTable* table_for(Backend backend);

const KernelTable& active();

// Replaces the active table for the rest of the process (tests, benchmarks).
// Returns false, leaving the selection unchanged, if the backend is unavailable.
bool force_backend(Backend backend);

std::string_view backend_name(Backend backend);

inline double sum(std::span<const double> x) { return active().sum(x.data(), x.size()); }

inline double dot(std::span<const double> x, std::span<const double> y) {
    return active().dot(x.data(), y.data(), x.size());
}

inline double squared_distance(std::span<const double> x, std::span<const double> y) {
    return active().squared_distance(x.data(), y.data(), x.size());
}

inline double chi_square_sum(std::span<const double> f, std::span<const double> g) {
    return active().chi_square_sum(f.data(), g.data(), f.size());
}

inline double hellinger_sum(std::span<const double> f, std::span<const double> g) {
    return active().hellinger_sum(f.data(), g.data(), f.size());
}

inline void affine_combine(double a, std::span<const double> x, double b,
                           std::span<const double> y, std::span<double> out) {
    active().affine_combine(a, x.data(), b, y.data(), out.data(), out.size());
}

namespace detail {
// Defined in the per-ISA translation units; each returns nullptr when the
// variant is not part of this build.
const KernelTable* avx2_table();
const KernelTable* neon_table();
}  // namespace detail

}  // namespace sievelab::kernels
