#include "sievelab/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace sievelab::kernels {
namespace {

bool cpu_has_avx2_fma() {
#if (defined(__x86_64__) || defined(__i386__)) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* pick_default() {
    if (const char* env = std::getenv("SIEVELAB_KERNELS")) {
        const std::string want{env};
        if (want == "scalar") return &scalar_table();
        if (want == "avx2") {
            if (const auto* t = table_for(Backend::Avx2)) return t;
        }
        if (want == "neon") {
            if (const auto* t = table_for(Backend::Neon)) return t;
        }
    }
    if (const auto* t = table_for(Backend::Avx2)) return t;
    if (const auto* t = table_for(Backend::Neon)) return t;
    return &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
    static std::atomic<const KernelTable*> current{pick_default()};
    return current;
}

}  // namespace

const KernelTable* table_for(Backend backend) {
    switch (backend) {
        case Backend::Scalar:
            return &scalar_table();
        case Backend::Avx2:
            return cpu_has_avx2_fma() ? detail::avx2_table() : nullptr;
        case Backend::Neon:
            // Advanced SIMD is mandatory on aarch64.
            return detail::neon_table();
    }
    return nullptr;
}

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

bool force_backend(Backend backend) {
    const KernelTable* t = table_for(backend);
    if (t == nullptr) return false;
    slot().store(t, std::memory_order_release);
    return true;
}

std::string_view backend_name(Backend backend) {
    switch (backend) {
        case Backend::Scalar:
            return "scalar";
        case Backend::Avx2:
            return "avx2";
        case Backend::Neon:
            return "neon";
    }
    return "unknown";
}

}  // namespace sievelab::kernels
